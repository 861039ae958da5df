#include "dirspeech/sot.hpp"

#include <algorithm>
#include <map>

#include "dirspeech/error.hpp"

namespace dirspeech {

namespace {

std::string_view marker(Role r) { return r == Role::Wearer ? kWearerToken : kPartnerToken; }

}  // namespace

std::string SotSequence::str() const {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        switch (t.kind) {
            case SotToken::Kind::Role: out += marker(t.role); break;
            case SotToken::Kind::Change: out += kChangeToken; break;
            case SotToken::Kind::Word: out += t.word; break;
        }
    }
    return out;
}

SotSequence SotSequence::from_string(std::string_view text) {
    SotSequence seq;
    for (auto& w : split_words(text)) {
        if (w == kWearerToken) seq.tokens.push_back(SotToken::role_marker(Role::Wearer));
        else if (w == kPartnerToken) seq.tokens.push_back(SotToken::role_marker(Role::Partner));
        else if (w == kChangeToken) seq.tokens.push_back(SotToken::change());
        else seq.tokens.push_back(SotToken::text(std::move(w)));
    }
    return seq;
}

bool SotSequence::well_formed() const {
    if (tokens.empty()) return true;
    if (tokens.front().kind != SotToken::Kind::Role) return false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].kind != SotToken::Kind::Change) continue;
        if (i + 1 >= tokens.size() || tokens[i + 1].kind != SotToken::Kind::Role) return false;
    }
    return true;
}

std::size_t SotSequence::change_count() const {
    return static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(),
                                                  [](const SotToken& t) { return t.kind == SotToken::Kind::Change; }));
}

SotSequence serialize_sot(std::vector<AttributedSegment> segments) {
    for (const auto& s : segments) {
        if (s.text.empty()) throw ArgumentError("serialize_sot: segment with empty text");
        if (s.start_s < 0.0) throw ArgumentError("serialize_sot: negative start time");
    }
    std::stable_sort(segments.begin(), segments.end(), [](const AttributedSegment& a, const AttributedSegment& b) {
        if (a.start_s != b.start_s) return a.start_s < b.start_s;
        return a.speaker == Role::Wearer && b.speaker == Role::Partner;
    });

    SotSequence seq;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (i == 0) {
            seq.tokens.push_back(SotToken::role_marker(s.speaker));
        } else if (s.speaker != segments[i - 1].speaker) {
            seq.tokens.push_back(SotToken::change());
            seq.tokens.push_back(SotToken::role_marker(s.speaker));
        }
        for (const auto& w : s.text) seq.tokens.push_back(SotToken::text(w));
    }
    return seq;
}

SotParseResult parse_sot(const SotSequence& sequence, SotParseMode mode) {
    SotParseResult result;
    const bool strict = mode == SotParseMode::Strict;
    auto problem = [&](const std::string& what) {
        if (strict) throw ParseError("parse_sot: " + what);
        result.warnings.push_back(what);
    };

    bool have_speaker = false;
    Role current = Role::Wearer;
    Words words;
    bool after_change = false;

    auto close_run = [&] {
        if (!have_speaker) return;
        if (words.empty()) return;
        if (!result.runs.empty() && result.runs.back().speaker == current) {
            result.runs.back().text += ' ' + join_words(words);
        } else {
            result.runs.push_back(SpeakerRun{current, join_words(words)});
        }
        words.clear();
    };

    const auto& toks = sequence.tokens;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];
        switch (t.kind) {
            case SotToken::Kind::Change:
                if (after_change) {
                    problem("repeated <sc> at token " + std::to_string(i));
                    break;
                }
                if (!have_speaker) problem("<sc> before any speaker at token " + std::to_string(i));
                close_run();
                after_change = true;
                break;
            case SotToken::Kind::Role:
                if (have_speaker && !after_change && t.role != current) {
                    problem("speaker marker without <sc> at token " + std::to_string(i));
                }
                close_run();
                current = t.role;
                have_speaker = true;
                after_change = false;
                break;
            case SotToken::Kind::Word:
                if (!have_speaker) {
                    problem("sequence does not start with a speaker marker; assuming wearer");
                    have_speaker = true;
                    current = Role::Wearer;
                } else if (after_change) {
                    problem("missing speaker marker after <sc> at token " + std::to_string(i) +
                            "; assuming the other speaker");
                    current = other(current);
                }
                after_change = false;
                words.push_back(t.word);
                break;
        }
    }
    if (after_change) problem("sequence ends with <sc>");
    close_run();
    return result;
}

SotParseResult parse_sot(std::string_view text, SotParseMode mode) {
    return parse_sot(SotSequence::from_string(text), mode);
}

std::string_view to_string(SotTask task) {
    switch (task) {
        case SotTask::Transcribe: return "transcribe";
        case SotTask::Translate: return "translate";
        case SotTask::Both: return "both";
    }
    return "transcribe";
}

SotTask parse_sot_task(std::string_view name) {
    if (name == "transcribe") return SotTask::Transcribe;
    if (name == "translate") return SotTask::Translate;
    if (name == "both") return SotTask::Both;
    throw ArgumentError("unknown SOT task '" + std::string(name) + "'");
}

std::string language_name(std::string_view code) {
    static const std::map<std::string, std::string, std::less<>> names{
        {"en", "English"}, {"es", "Spanish"}, {"fr", "French"}, {"it", "Italian"}, {"de", "German"}, {"pt", "Portuguese"}};
    const auto it = names.find(code);
    return it == names.end() ? std::string(code) : it->second;
}

TrainingExample build_training_example(const ManifestEntry& entry, SotTask task) {
    const auto langs = entry.languages();
    const auto lang_of = [&](Role r) {
        const auto it = langs.find(r);
        return it == langs.end() ? std::string("unknown") : language_name(it->second);
    };
    const std::string wearer_lang = lang_of(Role::Wearer);
    const std::string partner_lang = lang_of(Role::Partner);

    std::vector<AttributedSegment> segs;
    for (std::size_t i = 0; i < entry.segments.size(); ++i) {
        const auto& s = entry.segments[i];
        if (task != SotTask::Transcribe && normalize_text(s.translation).empty()) {
            throw ValidationError("entry '" + entry.id + "' segment " + std::to_string(i) +
                                  " has no translation for the " + std::string(to_string(task)) + " task");
        }
        Words text;
        if (task != SotTask::Translate) text = split_words(s.text);
        if (task != SotTask::Transcribe) {
            const auto tr = split_words(s.translation);
            text.insert(text.end(), tr.begin(), tr.end());
        }
        if (text.empty()) {
            throw ValidationError("entry '" + entry.id + "' segment " + std::to_string(i) + " has no text");
        }
        segs.push_back(AttributedSegment{s.speaker, s.start, std::move(text), s.lang});
    }

    const std::string markers = "Begin each speaker turn with <wearer> or <partner> and mark every speaker change "
                                "with <sc>.";
    std::string prompt;
    switch (task) {
        case SotTask::Transcribe:
            prompt = "Transcribe this conversation. The wearer speaks " + wearer_lang + " and the partner speaks " +
                     partner_lang + ". " + markers;
            break;
        case SotTask::Translate:
            prompt = "Translate this conversation. Translate the wearer's " + wearer_lang + " speech into " +
                     partner_lang + " and the partner's " + partner_lang + " speech into " + wearer_lang + ". " +
                     markers;
            break;
        case SotTask::Both:
            prompt = "Transcribe and translate this conversation. The wearer speaks " + wearer_lang +
                     " and the partner speaks " + partner_lang +
                     ". For every segment give the transcript followed by its translation into the other "
                     "speaker's language. " +
                     markers;
            break;
    }
    return TrainingExample{std::move(prompt), serialize_sot(std::move(segs)).str()};
}

}  // namespace dirspeech
