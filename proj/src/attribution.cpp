#include "dirspeech/attribution.hpp"

#include <algorithm>

#include <json.hpp>

#include "dirspeech/dsp_core.hpp"
#include "dirspeech/error.hpp"

namespace dirspeech {

std::string_view to_string(SpeakerTag tag) {
    switch (tag) {
        case SpeakerTag::Wearer: return "wearer";
        case SpeakerTag::Partner: return "partner";
        case SpeakerTag::Silence: return "silence";
    }
    return "silence";
}

SpeakerTag parse_tag(std::string_view name) {
    if (name == "wearer") return SpeakerTag::Wearer;
    if (name == "partner") return SpeakerTag::Partner;
    if (name == "silence") return SpeakerTag::Silence;
    throw ArgumentError("unknown speaker tag '" + std::string(name) + "'");
}

SpeakerTag to_tag(Role role) { return role == Role::Wearer ? SpeakerTag::Wearer : SpeakerTag::Partner; }

void TaggerConfig::validate() const {
    if (!(alpha > 0.0)) throw ConfigError("tagger alpha must be positive");
    if (!(vad_floor >= 0.0)) throw ConfigError("tagger vad_floor must be non-negative");
    if (!(epsilon > 0.0)) throw ConfigError("tagger epsilon must be positive");
}

bool energy_vad(std::span<const double> wearer_chunk, std::span<const double> partner_chunk,
                const TaggerConfig& cfg) {
    return std::max(frame_rms(wearer_chunk), frame_rms(partner_chunk)) >= cfg.vad_floor;
}

namespace {

SpeakerTag decide(double rms_wearer, double rms_partner, const TaggerConfig& cfg) {
    if (std::max(rms_wearer, rms_partner) < cfg.vad_floor) return SpeakerTag::Silence;
    const double ratio = rms_wearer / (rms_partner + cfg.epsilon);
    return ratio > cfg.alpha ? SpeakerTag::Wearer : SpeakerTag::Partner;
}

}  // namespace

SpeakerTag tag_chunk(std::span<const double> wearer_chunk, std::span<const double> partner_chunk,
                     const TaggerConfig& cfg) {
    if (wearer_chunk.size() != partner_chunk.size()) throw ArgumentError("tag_chunk: stream lengths differ");
    return decide(frame_rms(wearer_chunk), frame_rms(partner_chunk), cfg);
}

TaggedChunk tag_chunk_at(std::size_t chunk_idx, double start_s, std::span<const double> wearer_chunk,
                         std::span<const double> partner_chunk, const TaggerConfig& cfg, int sample_rate) {
    if (wearer_chunk.size() != partner_chunk.size()) throw ArgumentError("tag_chunk: stream lengths differ");
    TaggedChunk c;
    c.chunk_idx = chunk_idx;
    c.start_s = start_s;
    c.end_s = start_s + static_cast<double>(wearer_chunk.size()) / sample_rate;
    c.rms_wearer = frame_rms(wearer_chunk);
    c.rms_partner = frame_rms(partner_chunk);
    c.tag = decide(c.rms_wearer, c.rms_partner, cfg);
    return c;
}

std::vector<AttributedSpan> smooth_tags(std::span<const TaggedChunk> chunks, const TaggerConfig& cfg) {
    for (std::size_t i = 1; i < chunks.size(); ++i) {
        if (chunks[i].chunk_idx != chunks[i - 1].chunk_idx + 1 || chunks[i].start_s < chunks[i - 1].start_s) {
            throw ArgumentError("smooth_tags: chunk " + std::to_string(chunks[i].chunk_idx) +
                                " is out of order or not contiguous");
        }
    }

    const std::size_t n = chunks.size();
    const std::size_t h = cfg.hangover_chunks;
    std::vector<SpeakerTag> tags(n);
    for (std::size_t i = 0; i < n; ++i) tags[i] = chunks[i].tag;

    if (h > 0) {
        for (std::size_t i = h; i + h < n; ++i) {
            const SpeakerTag t = chunks[i].tag;
            if (t == SpeakerTag::Silence) continue;
            const SpeakerTag flip = t == SpeakerTag::Wearer ? SpeakerTag::Partner : SpeakerTag::Wearer;
            bool surrounded = true;
            for (std::size_t k = 1; k <= h && surrounded; ++k) {
                surrounded = chunks[i - k].tag == flip && chunks[i + k].tag == flip;
            }
            if (surrounded) tags[i] = flip;
        }
    }

    std::vector<AttributedSpan> spans;
    bool open = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (tags[i] == SpeakerTag::Silence) {
            open = false;
            continue;
        }
        const Role role = tags[i] == SpeakerTag::Wearer ? Role::Wearer : Role::Partner;
        if (open && spans.back().speaker == role) {
            spans.back().end_s = chunks[i].end_s;
        } else {
            spans.push_back(AttributedSpan{role, chunks[i].start_s, chunks[i].end_s});
            open = true;
        }
    }
    return spans;
}

std::string to_tag_log_line(const TaggedChunk& chunk) {
    return nlohmann::json{{"chunk_idx", chunk.chunk_idx}, {"start", chunk.start_s},
                          {"end", chunk.end_s},           {"tag", to_string(chunk.tag)},
                          {"rms_w", chunk.rms_wearer},    {"rms_p", chunk.rms_partner}}
        .dump();
}

}  // namespace dirspeech
