#include "dirspeech/slm_stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <cstdio>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "dirspeech/beamformer.hpp"
#include "dirspeech/error.hpp"
#include "dirspeech/sot.hpp"

namespace dirspeech {

using nlohmann::json;

SlidingWindow::SlidingWindow(double max_duration_s, std::size_t max_history_words, int sample_rate)
    : max_samples_(static_cast<std::size_t>(std::llround(max_duration_s * sample_rate))),
      max_history_words_(max_history_words),
      sample_rate_(sample_rate) {
    if (!(max_duration_s > 0.0) || sample_rate <= 0) throw ArgumentError("SlidingWindow: bad duration or rate");
}

std::size_t SlidingWindow::push_chunk(Signal chunk, double timestamp_s) {
    if (last_timestamp_ && !(timestamp_s > *last_timestamp_)) {
        throw ArgumentError("push_chunk: timestamp " + std::to_string(timestamp_s) + " does not follow " +
                            std::to_string(*last_timestamp_));
    }
    if (chunk.size() > max_samples_) throw ArgumentError("push_chunk: chunk longer than the window");
    last_timestamp_ = timestamp_s;
    samples_ += chunk.size();
    chunks_.push_back(WindowChunk{timestamp_s, std::move(chunk)});

    std::size_t evicted = 0;
    while (samples_ > max_samples_) {
        samples_ -= chunks_.front().samples.size();
        chunks_.pop_front();
        ++evicted;
    }
    return evicted;
}

void SlidingWindow::append_history(const Words& words) {
    history_.insert(history_.end(), words.begin(), words.end());
    if (history_.size() > max_history_words_) {
        history_.erase(history_.begin(), history_.begin() + static_cast<std::ptrdiff_t>(history_.size() - max_history_words_));
    }
}

double SlidingWindow::start_s() const { return chunks_.empty() ? 0.0 : chunks_.front().timestamp_s; }

double SlidingWindow::end_s() const {
    if (chunks_.empty()) return 0.0;
    const auto& last = chunks_.back();
    return last.timestamp_s + static_cast<double>(last.samples.size()) / sample_rate_;
}

Signal SlidingWindow::audio() const {
    Signal out;
    out.reserve(samples_);
    for (const auto& c : chunks_) out.insert(out.end(), c.samples.begin(), c.samples.end());
    return out;
}

std::string_view to_string(SlmTask task) { return task == SlmTask::Transcribe ? "transcribe" : "translate"; }

SlmTask parse_slm_task(std::string_view name) {
    if (name == "transcribe") return SlmTask::Transcribe;
    if (name == "translate") return SlmTask::Translate;
    throw ArgumentError("unknown SLM task '" + std::string(name) + "'");
}

std::string to_request_line(const SlmRequest& r) {
    json j{{"id", r.id},
           {"task", to_string(r.task)},
           {"src", r.src},
           {"tgt", r.tgt},
           {"prompt", r.prompt},
           {"history", r.history},
           {"window", {{"start", r.window_start_s}, {"end", r.window_end_s}}}};
    j["audio"] = {{"rate", r.sample_rate}, {"samples", r.audio ? *r.audio : Signal{}}};
    return j.dump();
}

SlmRequest parse_request_line(std::string_view line) {
    try {
        const auto j = json::parse(line);
        SlmRequest r;
        r.id = j.at("id").get<std::uint64_t>();
        r.task = parse_slm_task(j.at("task").get<std::string>());
        r.src = j.at("src").get<std::string>();
        r.tgt = j.at("tgt").get<std::string>();
        r.prompt = j.value("prompt", std::string{});
        r.history = j.value("history", std::string{});
        if (j.contains("window")) {
            r.window_start_s = j["window"].at("start").get<double>();
            r.window_end_s = j["window"].at("end").get<double>();
        }
        if (j.contains("audio")) {
            r.sample_rate = j["audio"].value("rate", kSampleRate);
            r.audio = std::make_shared<const Signal>(j["audio"].at("samples").get<Signal>());
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad SLM request: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ParseError(std::string("bad SLM request: ") + e.what());
    }
}

std::string to_response_line(const SlmResponse& r) { return json{{"id", r.id}, {"text", r.text}}.dump(); }

SlmResponse parse_response_line(std::string_view line) {
    try {
        const auto j = json::parse(line);
        SlmResponse r;
        r.id = j.at("id").get<std::uint64_t>();
        r.text = j.at("text").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad SLM response: ") + e.what());
    }
}

namespace {

std::string catalog_key(SlmTask task, SpeakerTag tag) {
    return std::string(to_string(task)) + "." + std::string(to_string(tag));
}

void replace_all(std::string& s, std::string_view what, std::string_view with) {
    for (std::size_t pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + with.size())) {
        s.replace(pos, what.size(), with);
    }
}

}  // namespace

PromptCatalog PromptCatalog::defaults() {
    PromptCatalog c;
    c.set("transcribe.wearer", "Transcribe the wearer's {src} speech in this audio.");
    c.set("transcribe.partner", "Transcribe the conversation partner's {src} speech in this audio.");
    c.set("translate.wearer", "Translate the wearer's {src} speech in this audio into {tgt}.");
    c.set("translate.partner", "Translate the conversation partner's {src} speech in this audio into {tgt}.");
    return c;
}

PromptCatalog PromptCatalog::from_json(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("prompt catalog is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("prompt catalog must be a JSON object");
    PromptCatalog c;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_string()) throw ConfigError("prompt template '" + key + "' is not a string");
        c.set(key, value.get<std::string>());
    }
    return c;
}

PromptCatalog PromptCatalog::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open prompt catalog " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

bool PromptCatalog::has(SlmTask task, SpeakerTag tag) const {
    const auto key = catalog_key(task, tag);
    if (templates_.contains(key)) return true;
    // Pair-specific entries alone do not cover every language pair.
    return false;
}

std::string PromptCatalog::render(SlmTask task, SpeakerTag tag, std::string_view src, std::string_view tgt) const {
    const auto key = catalog_key(task, tag);
    auto it = templates_.find(key + "." + std::string(src) + "-" + std::string(tgt));
    if (it == templates_.end()) it = templates_.find(key);
    if (it == templates_.end()) throw ConfigError("no prompt template for " + key);
    std::string out = it->second;
    replace_all(out, "{src}", language_name(src));
    replace_all(out, "{tgt}", language_name(tgt));
    return out;
}

std::array<SlmRequest, 2> build_requests(const SlidingWindow& window, SpeakerTag tag, const PromptCatalog& catalog,
                                         const LanguagePair& langs, std::uint64_t first_id) {
    if (tag == SpeakerTag::Silence) throw ArgumentError("build_requests: no requests for a silent chunk");
    const Role speaker = tag == SpeakerTag::Wearer ? Role::Wearer : Role::Partner;
    const std::string src(langs.of(speaker));
    const std::string tgt(langs.of(other(speaker)));

    auto audio = std::make_shared<const Signal>(window.audio());
    const auto history = window.history_text();

    std::array<SlmRequest, 2> out;
    for (std::size_t i = 0; i < 2; ++i) {
        auto& r = out[i];
        r.id = first_id + i;
        r.task = i == 0 ? SlmTask::Transcribe : SlmTask::Translate;
        r.src = src;
        r.tgt = r.task == SlmTask::Transcribe ? src : tgt;
        r.prompt = catalog.render(r.task, tag, src, tgt);
        r.history = history;
        r.audio = audio;
        r.sample_rate = window.sample_rate();
        r.window_start_s = window.start_s();
        r.window_end_s = window.end_s();
    }
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

bool contains_run(const Words& haystack, const Words& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

}  // namespace

MockSlm::MockSlm(std::vector<Segment> segments, MockSlmMode mode) : segments_(std::move(segments)), mode_(mode) {
    if (!(mode_.sub_rate >= 0.0 && mode_.sub_rate <= 1.0)) throw ConfigError("mock SLM sub_rate must be in [0, 1]");
}

Words MockSlm::segment_words(std::size_t segment, SlmTask task) const {
    const auto& s = segments_.at(segment);
    Words words = split_words(task == SlmTask::Transcribe ? s.text : s.translation);
    if (mode_.kind != MockSlmMode::Kind::Noisy || mode_.sub_rate <= 0.0) return words;

    // The draw for a word does not depend on the rate, so a higher rate only
    // ever adds substitutions.
    const std::uint64_t base = splitmix64(mode_.seed ^ fnv1a(to_string(task)) ^ (fnv1a(s.lang) << 1));
    for (std::size_t w = 0; w < words.size(); ++w) {
        const std::uint64_t h = splitmix64(base ^ splitmix64(segment * 0x10001ULL + w));
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        if (u < mode_.sub_rate) {
            char buf[24];
            std::snprintf(buf, sizeof buf, "zz%08llx", static_cast<unsigned long long>(splitmix64(h) & 0xffffffffULL));
            words[w] = buf;
        }
    }
    return words;
}

SlmResponse MockSlm::respond(const SlmRequest& request) const {
    SlmResponse out;
    out.id = request.id;

    std::vector<std::size_t> in_window;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& s = segments_[i];
        if (s.lang != request.src) continue;
        if (request.task == SlmTask::Translate && normalize_text(s.translation).empty()) continue;
        const double mid = 0.5 * (s.start + s.end);
        if (mid >= request.window_start_s && mid < request.window_end_s) in_window.push_back(i);
    }
    std::stable_sort(in_window.begin(), in_window.end(),
                     [&](std::size_t a, std::size_t b) { return segments_[a].start < segments_[b].start; });

    // Resume after the latest segment already present in the history.
    const Words history = normalized_words(request.history);
    std::size_t first = 0;
    for (std::size_t k = in_window.size(); k-- > 0;) {
        if (contains_run(history, normalized_words(join_words(segment_words(in_window[k], request.task))))) {
            first = k + 1;
            break;
        }
    }

    Words emitted;
    for (std::size_t k = first; k < in_window.size(); ++k) {
        const auto w = segment_words(in_window[k], request.task);
        emitted.insert(emitted.end(), w.begin(), w.end());
    }
    out.text = join_words(emitted);
    return out;
}

std::vector<SlmResponse> MockSlm::complete(std::span<const SlmRequest> requests) {
    std::vector<SlmResponse> out;
    out.reserve(requests.size());
    for (const auto& r : requests) out.push_back(respond(r));
    return out;
}

SocketSlmClient::SocketSlmClient(const Endpoint& endpoint, std::chrono::milliseconds timeout)
    : socket_(LineSocket::connect(endpoint, timeout)), timeout_(timeout) {}

std::vector<SlmResponse> SocketSlmClient::complete(std::span<const SlmRequest> requests) {
    using clock = std::chrono::steady_clock;
    std::map<std::uint64_t, clock::time_point> sent;
    for (const auto& r : requests) {
        if (!sent.emplace(r.id, clock::now()).second) throw ArgumentError("duplicate SLM request id");
        socket_.send_line(to_request_line(r));
    }

    std::vector<SlmResponse> out;
    const auto deadline = clock::now() + timeout_;
    while (out.size() < requests.size()) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
        if (left.count() <= 0) throw BackendError("SLM did not answer within " + std::to_string(timeout_.count()) + " ms");
        const auto line = socket_.recv_line(left);
        if (!line) continue;
        SlmResponse r;
        try {
            r = parse_response_line(*line);
        } catch (const ParseError& e) {
            throw BackendError(e.what());
        }
        const auto it = sent.find(r.id);
        if (it == sent.end()) throw BackendError("SLM answered unknown request id " + std::to_string(r.id));
        r.latency_ms = std::chrono::duration<double, std::milli>(clock::now() - it->second).count();
        sent.erase(it);
        out.push_back(std::move(r));
    }
    return out;
}

std::string to_event_line(const StreamEvent& e) {
    return json{{"id", e.id}, {"t", e.t}, {"tag", to_string(e.tag)}, {"task", to_string(e.task)}, {"text", e.text}}
        .dump();
}

StreamEvent parse_event_line(std::string_view line, std::size_t line_number) {
    const std::string where = line_number ? " (line " + std::to_string(line_number) + ")" : std::string{};
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError("bad event" + where + ": " + e.what());
    }
    try {
        StreamEvent e;
        e.id = j.value("id", std::string{});
        e.t = j.at("t").get<double>();
        e.tag = parse_tag(j.at("tag").get<std::string>());
        e.task = parse_slm_task(j.at("task").get<std::string>());
        e.text = j.at("text").get<std::string>();
        if (e.tag == SpeakerTag::Silence) throw ValidationError("event tagged silence" + where);
        return e;
    } catch (const json::exception& e) {
        throw ValidationError("bad event" + where + ": " + e.what());
    } catch (const ArgumentError& e) {
        throw ValidationError("bad event" + where + ": " + e.what());
    }
}

std::vector<StreamEvent> read_event_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open event log " + path.string());
    std::vector<StreamEvent> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_event_line(line, n));
    }
    return out;
}

StreamInput stream_input_from_scene(std::string id, const Scene& scene, const LanguagePair& langs) {
    return StreamInput{std::move(id), scene.mixture, scene.clean_wearer, scene.clean_partner, langs};
}

void StreamConfig::validate() const {
    tagger.validate();
    stft.validate();
    if (min_interval_chunks == 0) throw ConfigError("min_interval_chunks must be at least 1");
    for (auto task : {SlmTask::Transcribe, SlmTask::Translate}) {
        for (auto tag : {SpeakerTag::Wearer, SpeakerTag::Partner}) {
            if (!prompts.has(task, tag)) throw ConfigError("no prompt template for " + catalog_key(task, tag));
        }
    }
}

namespace {

// Chunk-wise mouth beam with the same latency as the oracle separator.
class MouthBeamStream {
public:
    MouthBeamStream(const ArrayGeometry& geometry, const StftParams& params)
        : weights_(design_delay_and_sum(geometry, MouthTarget{}, params)), mics_(geometry.mics.size()), out_(params) {
        for (std::size_t m = 0; m < mics_; ++m) analysis_.emplace_back(params);
    }

    Signal push(const std::vector<std::span<const double>>& chunk) {
        std::vector<std::vector<std::vector<Complex>>> frames(mics_);
        for (std::size_t m = 0; m < mics_; ++m) frames[m] = analysis_[m].push(chunk[m]);
        return combine(frames);
    }

    Signal finish(std::size_t length) {
        out_.set_length(length);
        std::vector<std::vector<std::vector<Complex>>> frames(mics_);
        for (std::size_t m = 0; m < mics_; ++m) frames[m] = analysis_[m].finish();
        Signal out = combine(frames);
        const Signal tail = out_.finish(length);
        out.insert(out.end(), tail.begin(), tail.end());
        return out;
    }

private:
    Signal combine(const std::vector<std::vector<std::vector<Complex>>>& frames) {
        Signal out;
        const std::size_t bins = out_bins();
        std::vector<Complex> y(bins);
        for (std::size_t t = 0; t < frames[0].size(); ++t) {
            for (std::size_t f = 0; f < bins; ++f) {
                Complex acc{};
                for (std::size_t m = 0; m < mics_; ++m) acc += weights_[f * mics_ + m] * frames[m][t][f];
                y[f] = acc;
            }
            const Signal s = out_.add_frame(y);
            out.insert(out.end(), s.begin(), s.end());
        }
        return out;
    }
    std::size_t out_bins() const { return weights_.size() / mics_; }

    std::vector<Complex> weights_;
    std::size_t mics_;
    std::vector<StreamingStft> analysis_;
    OverlapAdd out_;
};

std::span<const double> slice(const Signal& s, std::size_t begin, std::size_t end) {
    if (s.empty()) return {};
    return std::span<const double>(s).subspan(begin, end - begin);
}

}  // namespace

StreamResult run_stream(const StreamInput& input, SeparatorBackend& separator, SlmBackend& slm,
                        const StreamConfig& config) {
    config.validate();
    input.mixture.validate();
    require_canonical_rate(input.mixture, "stream input");
    const bool has_refs = !input.clean_wearer.channels.empty();
    if (has_refs) {
        input.clean_wearer.validate();
        input.clean_partner.validate();
        if (input.clean_wearer.length() != input.mixture.length() ||
            input.clean_partner.length() != input.mixture.length()) {
            throw ValidationError("stream references and mixture differ in length");
        }
    }

    const auto started = std::chrono::steady_clock::now();
    const std::size_t len = input.mixture.length();
    const std::size_t n_chunks = (len + kChunkSamples - 1) / kChunkSamples;
    const Signal& mic0 = input.mixture.channels[0];
    static const Signal kNone;
    const Signal& ref_w = has_refs ? input.clean_wearer.channels[0] : kNone;
    const Signal& ref_p = has_refs ? input.clean_partner.channels[0] : kNone;

    std::optional<MouthBeamStream> beam;
    if (config.geometry && config.geometry->mics.size() == input.mixture.num_channels()) {
        beam.emplace(*config.geometry, config.stft);
    }

    StreamResult result;
    Signal beam_out;
    SlidingWindow window;
    std::uint64_t next_id = 0;
    std::size_t since_request = 0;
    std::size_t next_tag = 0;

    auto handle_chunk = [&](std::size_t k) {
        const std::size_t b = k * kChunkSamples;
        const std::size_t e = std::min(len, b + kChunkSamples);
        const double t = static_cast<double>(b) / kSampleRate;
        const auto tagged =
            tag_chunk_at(k, t, slice(result.wearer, b, e), slice(result.partner, b, e), config.tagger);
        result.tags.push_back(tagged);
        if (tagged.tag == SpeakerTag::Silence) return;

        ++result.stats.speech_chunks;
        const Signal& heard = beam ? beam_out : mic0;
        result.stats.evicted_chunks += window.push_chunk(Signal(heard.begin() + b, heard.begin() + e), t);
        if (++since_request < config.min_interval_chunks) return;
        since_request = 0;

        const auto requests = build_requests(window, tagged.tag, config.prompts, input.langs, next_id);
        next_id += requests.size();
        result.stats.requests += requests.size();
        std::vector<SlmResponse> responses;
        try {
            responses = slm.complete(requests);
        } catch (const BackendError& err) {
            ++result.stats.backend_errors;
            spdlog::warn("chunk {}: SLM request failed: {}", k, err.what());
            return;
        }
        for (const auto& req : requests) {
            const auto it = std::find_if(responses.begin(), responses.end(),
                                         [&](const SlmResponse& r) { return r.id == req.id; });
            if (it == responses.end()) {
                ++result.stats.backend_errors;
                spdlog::warn("chunk {}: no SLM response for request {}", k, req.id);
                continue;
            }
            const Words words = split_words(it->text);
            if (words.empty()) continue;
            result.events.push_back(StreamEvent{input.id, t, tagged.tag, req.task, join_words(words)});
            window.append_history(words);
        }
    };

    auto drain_ready = [&] {
        const std::size_t ready = std::min({result.wearer.size(), result.partner.size(),
                                            beam ? beam_out.size() : len});
        while (next_tag < n_chunks && std::min(len, (next_tag + 1) * kChunkSamples) <= ready) handle_chunk(next_tag++);
    };

    auto append = [](Signal& dst, const Signal& src) { dst.insert(dst.end(), src.begin(), src.end()); };

    for (std::size_t k = 0; k < n_chunks; ++k) {
        const std::size_t b = k * kChunkSamples;
        const std::size_t e = std::min(len, b + kChunkSamples);
        auto sep = separator.process(k, slice(mic0, b, e), slice(ref_w, b, e), slice(ref_p, b, e));
        append(result.wearer, sep.wearer);
        append(result.partner, sep.partner);
        if (beam) {
            std::vector<std::span<const double>> mics;
            for (const auto& ch : input.mixture.channels) mics.push_back(slice(ch, b, e));
            append(beam_out, beam->push(mics));
        }
        drain_ready();
    }
    auto tail = separator.finish();
    append(result.wearer, tail.wearer);
    append(result.partner, tail.partner);
    if (beam) append(beam_out, beam->finish(len));
    // A misbehaving backend must not stall tagging.
    result.wearer.resize(len, 0.0);
    result.partner.resize(len, 0.0);
    beam_out.resize(beam ? len : 0, 0.0);
    drain_ready();

    result.stats.chunks = n_chunks;
    result.stats.audio_s = static_cast<double>(len) / kSampleRate;
    result.stats.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace dirspeech
