#include "dirspeech/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "dirspeech/beamformer.hpp"
#include "dirspeech/demo_corpus.hpp"
#include "dirspeech/metrics.hpp"
#include "dirspeech/separator.hpp"
#include "dirspeech/sot.hpp"

namespace dirspeech {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Io: return kExitIo;
        case ErrorKind::Backend: return kExitBackend;
        default: return kExitValidation;
    }
}

SeparatorChoice parse_separator_choice(std::string_view text) {
    SeparatorChoice c;
    if (text == "oracle") c.kind = SeparatorChoice::Kind::Oracle;
    else if (text == "passthrough") c.kind = SeparatorChoice::Kind::Passthrough;
    else {
        c.kind = SeparatorChoice::Kind::External;
        c.endpoint = parse_endpoint(text);
    }
    return c;
}

SlmChoice parse_slm_choice(std::string_view text) {
    SlmChoice c;
    if (text == "oracle") c.kind = SlmChoice::Kind::Oracle;
    else if (text == "noisy") c.kind = SlmChoice::Kind::Noisy;
    else {
        c.kind = SlmChoice::Kind::External;
        c.endpoint = parse_endpoint(text);
    }
    return c;
}

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes beside the target and renames, so a failed run never leaves a half-written file.
void write_text_atomically(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

template <class T>
void read_pair(const json& j, const char* key, std::array<T, 2>& dst) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_array() && v.size() == 2) {
        dst = {v[0].get<T>(), v[1].get<T>()};
    } else {
        dst = {v.get<T>(), v.get<T>()};
    }
}

fs::path beside(const fs::path& base, const std::string& stored) {
    const fs::path p(stored);
    return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

RunConfig RunConfig::from_json(std::string_view json_text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    RunConfig c;
    try {
        if (j.contains("geometry")) c.geometry_path = beside(base_dir, j["geometry"].get<std::string>());
        if (j.contains("prompts")) c.prompts_path = beside(base_dir, j["prompts"].get<std::string>());
        if (j.contains("stft")) {
            const auto& s = j["stft"];
            c.stft.fft_size = s.value("fft_size", c.stft.fft_size);
            c.stft.win_length = s.value("win_length", c.stft.win_length);
            c.stft.hop = s.value("hop", c.stft.hop);
        }
        if (j.contains("tagger")) {
            const auto& t = j["tagger"];
            c.tagger.alpha = t.value("alpha", c.tagger.alpha);
            c.tagger.vad_floor = t.value("vad_floor", c.tagger.vad_floor);
            c.tagger.hangover_chunks = t.value("hangover_chunks", c.tagger.hangover_chunks);
        }
        if (j.contains("separator")) {
            const auto& s = j["separator"];
            if (s.is_string()) {
                c.separator = parse_separator_choice(s.get<std::string>());
            } else {
                c.separator = parse_separator_choice(s.at("endpoint").get<std::string>());
                c.separator.timeout_ms = s.value("timeout_ms", c.separator.timeout_ms);
            }
        }
        if (j.contains("slm")) {
            const auto& s = j["slm"];
            if (s.is_string()) {
                c.slm = parse_slm_choice(s.get<std::string>());
            } else {
                c.slm = parse_slm_choice(s.contains("endpoint") ? s["endpoint"].get<std::string>()
                                                                : s.value("mode", std::string("oracle")));
                c.slm.seed = s.value("seed", c.slm.seed);
                c.slm.sub_rate = s.value("sub_rate", c.slm.sub_rate);
                c.slm.timeout_ms = s.value("timeout_ms", c.slm.timeout_ms);
            }
        }
        if (j.contains("langs")) {
            const auto& l = j["langs"];
            c.langs.wearer = l.at(0).get<std::string>();
            c.langs.partner = l.at(1).get<std::string>();
        }
        c.min_interval_chunks = j.value("min_interval_chunks", c.min_interval_chunks);
        if (j.contains("out")) c.out = beside(base_dir, j["out"].get<std::string>());
        c.seed = j.value("seed", c.seed);
        if (j.contains("simulate")) {
            const auto& s = j["simulate"];
            read_pair(s, "snr_db", c.simulate.snr_db);
            read_pair(s, "overlap_s", c.simulate.overlap_s);
            read_pair(s, "words", c.simulate.words);
            if (s.contains("noise_db")) {
                c.simulate.noise_db = s["noise_db"].is_null() ? std::nullopt : std::optional(s["noise_db"].get<double>());
            }
            c.simulate.partner_distance = s.value("partner_distance", c.simulate.partner_distance);
            c.simulate.workers = s.value("workers", c.simulate.workers);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::load(const fs::path& path) {
    return from_json(read_text(path), path.parent_path());
}

void RunConfig::finalize() {
    stft.validate();
    tagger.validate();
    if (min_interval_chunks == 0) throw ConfigError("min_interval_chunks must be at least 1");
    if (!(slm.sub_rate >= 0.0 && slm.sub_rate <= 1.0)) throw ConfigError("sub_rate must be in [0, 1]");
    if (simulate.snr_db[0] > simulate.snr_db[1]) throw ConfigError("simulate.snr_db range is reversed");
    if (simulate.overlap_s[0] < 0.0 || simulate.overlap_s[0] > simulate.overlap_s[1]) {
        throw ConfigError("simulate.overlap_s must be a non-negative range");
    }
    if (simulate.words[0] == 0 || simulate.words[0] > simulate.words[1]) {
        throw ConfigError("simulate.words must be a positive range");
    }
    if (simulate.workers == 0) simulate.workers = 1;
    if (geometry_path) {
        if (!fs::exists(*geometry_path)) throw IoError("geometry file not found: " + geometry_path->string());
        geometry = load_geometry(*geometry_path);
    }
    if (prompts_path && !fs::exists(*prompts_path)) {
        throw IoError("prompt catalog not found: " + prompts_path->string());
    }
}

StreamConfig RunConfig::stream_config() const {
    StreamConfig s;
    s.tagger = tagger;
    s.stft = stft;
    s.min_interval_chunks = min_interval_chunks;
    s.geometry = geometry;
    if (prompts_path) s.prompts = PromptCatalog::load(*prompts_path);
    return s;
}

// ---------------------------------------------------------------- simulate

namespace {

struct ClipPool {
    std::map<std::string, std::vector<SourceClip>> by_lang;
};

ClipPool load_clip_pool(const fs::path& manifest) {
    ClipPool pool;
    std::size_t bad = 0;
    for (const auto& c : read_clip_manifest(manifest)) {
        try {
            auto audio = read_wav(resolve_beside(manifest, c.wav));
            if (audio.num_channels() != 1) throw ValidationError("clip is not mono");
            require_canonical_rate(audio, "clip " + c.id);
            pool.by_lang[c.lang].push_back(SourceClip{std::move(audio), c.text, c.lang, c.translation});
        } catch (const Error& e) {
            ++bad;
            spdlog::warn("skipping clip '{}': {}", c.id, e.what());
        }
    }
    if (bad) spdlog::warn("{} clip(s) skipped", bad);
    return pool;
}

template <class T>
T uniform(std::mt19937_64& rng, T lo, T hi) {
    if constexpr (std::is_integral_v<T>) {
        return std::uniform_int_distribution<T>(lo, hi)(rng);
    } else {
        return lo == hi ? lo : std::uniform_real_distribution<T>(lo, hi)(rng);
    }
}

SceneSpec draw_scene(const RunConfig& config, const ClipPool* pool, std::size_t index) {
    const std::uint64_t scene_seed = config.seed + index;
    std::mt19937_64 rng(scene_seed);
    SceneSpec spec;
    spec.seed = scene_seed;
    spec.partner_direction = kPartnerDirections[uniform<std::size_t>(rng, 0, kPartnerDirections.size() - 1)];
    spec.snr_db = uniform(rng, config.simulate.snr_db[0], config.simulate.snr_db[1]);
    spec.noise_level_db = config.simulate.noise_db;
    spec.partner_distance = config.simulate.partner_distance;

    if (pool) {
        auto pick = [&](const std::string& lang) -> const SourceClip& {
            const auto it = pool->by_lang.find(lang);
            if (it == pool->by_lang.end() || it->second.empty()) {
                throw ValidationError("no usable clips in language '" + lang + "'");
            }
            return it->second[uniform<std::size_t>(rng, 0, it->second.size() - 1)];
        };
        spec.wearer = pick(config.langs.wearer);
        spec.partner = pick(config.langs.partner);
    } else {
        const auto w_words = uniform(rng, config.simulate.words[0], config.simulate.words[1]);
        const auto p_words = uniform(rng, config.simulate.words[0], config.simulate.words[1]);
        const auto s1 = rng();
        const auto s2 = rng();
        spec.wearer = demo::make_clip(w_words, config.langs.wearer, config.langs.partner, 120.0, s1);
        spec.partner = demo::make_clip(p_words, config.langs.partner, config.langs.wearer, 210.0, s2);
    }
    const double shortest = std::min(spec.wearer.audio.duration_s(), spec.partner.audio.duration_s());
    spec.overlap_s = std::min(uniform(rng, config.simulate.overlap_s[0], config.simulate.overlap_s[1]), shortest);
    return spec;
}

std::string scene_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%04zu", index);
    return buf;
}

}  // namespace

void cmd_simulate(const RunConfig& config, const SimulateRequest& request) {
    std::optional<ClipPool> pool;
    if (request.clips) pool = load_clip_pool(*request.clips);
    fs::create_directories(config.out);

    struct Outcome {
        std::optional<ManifestEntry> entry;
        std::string summary;
        std::string error;
    };
    std::vector<Outcome> outcomes(request.count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < request.count; i = next++) {
            try {
                const auto spec = draw_scene(config, pool ? &*pool : nullptr, i);
                const auto scene = simulate_scene(spec, config.geometry);
                const std::string id = scene_id(i);
                ManifestEntry e;
                e.id = id;
                e.wav = id + "_mixture.wav";
                e.clean_wearer = id + "_clean_wearer.wav";
                e.clean_partner = id + "_clean_partner.wav";
                e.segments = scene.segments;
                write_wav(scene.mixture, config.out / e.wav, WavEncoding::Float32);
                write_wav(scene.clean_wearer, config.out / *e.clean_wearer, WavEncoding::Float32);
                write_wav(scene.clean_partner, config.out / *e.clean_partner, WavEncoding::Float32);
                char line[160];
                std::snprintf(line, sizeof line, "%s dir=%+.0f snr=%.1fdB overlap=%.2fs dur=%.2fs", id.c_str(),
                              spec.partner_direction, spec.snr_db, spec.overlap_s, scene.mixture.duration_s());
                outcomes[i].summary = line;
                outcomes[i].entry = std::move(e);
            } catch (const Error& err) {
                outcomes[i].error = err.what();
            }
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(config.simulate.workers, request.count));
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < n_workers; ++w) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].entry) {
            std::cout << outcomes[i].summary << "\n";
            entries.push_back(std::move(*outcomes[i].entry));
        } else {
            spdlog::warn("{} skipped: {}", scene_id(i), outcomes[i].error);
        }
    }
    write_manifest(entries, config.out / "scenes.jsonl");
    if (request.count > 0 && entries.empty()) throw ValidationError("no scene could be simulated");
}

// ------------------------------------------------------------------ stream

namespace {

std::unique_ptr<SeparatorBackend> make_separator(const SeparatorChoice& choice, bool has_refs, const StftParams& stft) {
    switch (choice.kind) {
        case SeparatorChoice::Kind::External:
            return std::make_unique<ExternalSeparatorBackend>(choice.endpoint,
                                                              std::chrono::milliseconds(choice.timeout_ms));
        case SeparatorChoice::Kind::Oracle:
            if (has_refs) return std::make_unique<OracleSeparatorBackend>(stft);
            spdlog::warn("no clean references; the oracle separator falls back to passthrough");
            [[fallthrough]];
        case SeparatorChoice::Kind::Passthrough: return std::make_unique<PassthroughSeparatorBackend>();
    }
    return std::make_unique<PassthroughSeparatorBackend>();
}

MockSlmMode mock_mode(const SlmChoice& choice) {
    return choice.kind == SlmChoice::Kind::Noisy ? MockSlmMode::noisy(choice.seed, choice.sub_rate)
                                                 : MockSlmMode::oracle();
}

LanguagePair langs_of(const ManifestEntry& e, const LanguagePair& fallback) {
    LanguagePair p = fallback;
    const auto l = e.languages();
    if (auto it = l.find(Role::Wearer); it != l.end()) p.wearer = it->second;
    if (auto it = l.find(Role::Partner); it != l.end()) p.partner = it->second;
    return p;
}

}  // namespace

void cmd_stream(const RunConfig& config, const StreamRequest& request) {
    if (!!request.manifest == !!request.wav) throw ArgumentError("stream needs exactly one of --manifest or --wav");
    const StreamConfig stream_cfg = config.stream_config();

    struct Job {
        StreamInput input;
        std::vector<Segment> segments;
    };
    std::vector<Job> jobs;
    if (request.manifest) {
        for (const auto& e : read_manifest(*request.manifest)) {
            Job job;
            job.input.id = e.id;
            job.input.mixture = read_wav(resolve_beside(*request.manifest, e.wav));
            if (e.clean_wearer && e.clean_partner) {
                job.input.clean_wearer = read_wav(resolve_beside(*request.manifest, *e.clean_wearer));
                job.input.clean_partner = read_wav(resolve_beside(*request.manifest, *e.clean_partner));
            }
            job.input.langs = langs_of(e, config.langs);
            job.segments = e.segments;
            jobs.push_back(std::move(job));
        }
    } else {
        Job job;
        job.input.id = request.wav->stem().string();
        job.input.mixture = read_wav(*request.wav);
        job.input.langs = config.langs;
        jobs.push_back(std::move(job));
    }

    // Connect before any output exists so an unreachable backend leaves nothing behind.
    std::unique_ptr<SocketSlmClient> remote_slm;
    if (config.slm.kind == SlmChoice::Kind::External) {
        remote_slm = std::make_unique<SocketSlmClient>(config.slm.endpoint, std::chrono::milliseconds(config.slm.timeout_ms));
    }

    std::string events, tags;
    StreamStats total;
    const fs::path sep_dir = config.out / "separated";
    std::vector<std::pair<fs::path, AudioClip>> wavs;
    for (const auto& job : jobs) {
        const bool has_refs = !job.input.clean_wearer.channels.empty();
        auto separator = make_separator(config.separator, has_refs, config.stft);
        std::unique_ptr<MockSlm> mock;
        if (!remote_slm) mock = std::make_unique<MockSlm>(job.segments, mock_mode(config.slm));
        SlmBackend& slm = remote_slm ? static_cast<SlmBackend&>(*remote_slm) : *mock;

        auto result = run_stream(job.input, *separator, slm, stream_cfg);
        for (const auto& ev : result.events) events += to_event_line(ev) + "\n";
        for (const auto& tc : result.tags) {
            auto j = json::parse(to_tag_log_line(tc));
            j["id"] = job.input.id;
            tags += j.dump() + "\n";
        }
        wavs.emplace_back(sep_dir / (job.input.id + "_wearer.wav"), AudioClip::mono(std::move(result.wearer)));
        wavs.emplace_back(sep_dir / (job.input.id + "_partner.wav"), AudioClip::mono(std::move(result.partner)));

        const auto& s = result.stats;
        std::cout << job.input.id << " chunks=" << s.chunks << " speech=" << s.speech_chunks
                  << " events=" << result.events.size() << " rtf=" << s.real_time_factor() << "\n";
        total.chunks += s.chunks;
        total.speech_chunks += s.speech_chunks;
        total.requests += s.requests;
        total.backend_errors += s.backend_errors;
        total.evicted_chunks += s.evicted_chunks;
        total.audio_s += s.audio_s;
        total.wall_s += s.wall_s;
    }

    fs::create_directories(sep_dir);
    for (const auto& [path, clip] : wavs) write_wav(clip, path, WavEncoding::Float32);
    write_text_atomically(config.out / "tags.jsonl", tags);
    write_text_atomically(config.out / "events.jsonl", events);
    const json stats{{"streams", jobs.size()},
                     {"chunks", total.chunks},
                     {"speech_chunks", total.speech_chunks},
                     {"requests", total.requests},
                     {"backend_errors", total.backend_errors},
                     {"evicted_chunks", total.evicted_chunks},
                     {"audio_s", total.audio_s},
                     {"wall_s", total.wall_s},
                     {"chunks_per_sec", total.chunks_per_second()},
                     {"real_time_factor", total.real_time_factor()}};
    write_text_atomically(config.out / "stream_stats.json", stats.dump(2) + "\n");
}

// ------------------------------------------------------------------- score

namespace {

Role role_of(SpeakerTag tag) { return tag == SpeakerTag::Wearer ? Role::Wearer : Role::Partner; }

std::map<std::string, SceneHypothesis> hypotheses_from_events(const fs::path& path) {
    std::map<std::string, SceneHypothesis> out;
    for (const auto& ev : read_event_log(path)) {
        auto& h = out[ev.id];
        h.has_translation = true;
        auto& runs = ev.task == SlmTask::Transcribe ? h.transcript : h.translation;
        runs.push_back(SpeakerRun{role_of(ev.tag), ev.text});
    }
    return out;
}

std::map<std::string, SceneHypothesis> hypotheses_from_sot(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::map<std::string, SceneHypothesis> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("SOT output line " + std::to_string(n) + ": " + e.what());
        }
        if (!j.contains("id") || !j["id"].is_string()) {
            throw ValidationError("SOT output line " + std::to_string(n) + " has no id");
        }
        auto& h = out[j["id"].get<std::string>()];
        for (const char* key : {"transcribe", "translate"}) {
            if (!j.contains(key)) continue;
            const auto parsed = parse_sot(j[key].get<std::string>());
            for (const auto& w : parsed.warnings) spdlog::warn("SOT output line {}: {}", n, w);
            if (std::string_view(key) == "transcribe") {
                h.transcript = parsed.runs;
            } else {
                h.translation = parsed.runs;
                h.has_translation = true;
            }
        }
    }
    return out;
}

}  // namespace

void cmd_score(const RunConfig&, const ScoreRequest& request) {
    if (!!request.events == !!request.sot) throw ArgumentError("score needs exactly one of --events or --sot");
    const auto manifest = read_manifest(request.manifest);
    auto hyps = request.events ? hypotheses_from_events(*request.events) : hypotheses_from_sot(*request.sot);

    std::set<std::string> known;
    for (const auto& e : manifest) known.insert(e.id);
    std::vector<std::string> unknown;
    for (const auto& [id, h] : hyps) {
        if (!known.contains(id)) unknown.push_back(id.empty() ? "<empty>" : id);
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& id : unknown) list += (list.empty() ? "" : ", ") + id;
        throw ValidationError("ids not in the manifest: " + list);
    }

    ScoreReport report;
    const bool with_translation =
        request.events.has_value() || std::any_of(hyps.begin(), hyps.end(), [](auto& kv) { return kv.second.has_translation; });
    for (const auto& e : manifest) {
        SceneHypothesis h = hyps.contains(e.id) ? hyps[e.id] : SceneHypothesis{};
        h.has_translation = with_translation;
        add_scene(report, e.segments, h);

        if (request.separated && e.clean_partner) {
            const fs::path est_path = *request.separated / (e.id + "_partner.wav");
            if (!fs::exists(est_path)) {
                spdlog::warn("{}: no separated partner output at {}", e.id, est_path.string());
                continue;
            }
            const auto ref = read_wav(resolve_beside(request.manifest, *e.clean_partner));
            const auto est = read_wav(est_path);
            if (ref.length() != est.length()) throw ValidationError(e.id + ": separated output length differs");
            report.si_sdr_db.push_back(si_sdr(ref.channels[0], est.channels[0]));
        }
    }

    const std::string text = report.to_json() + "\n";
    if (request.report) write_text_atomically(*request.report, text);
    else std::cout << text;
}

// --------------------------------------------------------------------- sot

void cmd_sot(const RunConfig& config, const SotRequest& request) {
    const auto manifest = read_manifest(request.manifest);
    std::string out;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        try {
            const auto ex = build_training_example(manifest[i], request.task);
            out += json{{"id", manifest[i].id}, {"prompt", ex.prompt}, {"target", ex.target}}.dump() + "\n";
        } catch (const ValidationError& e) {
            ++failures;
            spdlog::error("manifest line {}: {}", i + 1, e.what());
        }
    }
    if (failures) {
        throw ValidationError(std::to_string(failures) + " of " + std::to_string(manifest.size()) +
                              " entries are not usable for the " + std::string(to_string(request.task)) + " task");
    }
    write_text_atomically(config.out / ("sot_" + std::string(to_string(request.task)) + ".jsonl"), out);
    std::cout << manifest.size() << " training pairs\n";
}

// ------------------------------------------------------------------- beams

void cmd_beams(const RunConfig& config, const BeamsRequest& request) {
    const auto azimuths = request.azimuths.empty()
                              ? std::vector<double>(kPartnerDirections.begin(), kPartnerDirections.end())
                              : request.azimuths;
    const auto weights = design_beams(config.geometry, azimuths, config.stft);
    fs::create_directories(config.out);
    save_beam_weights(weights, config.out / "beams.json");

    // Response of each beam to its own look direction at 1 kHz, as a sanity line.
    const std::size_t bin = 1000 * config.stft.fft_size / kSampleRate;
    const double hz = static_cast<double>(bin) * kSampleRate / static_cast<double>(config.stft.fft_size);
    for (std::size_t b = 0; b < weights.num_beams(); ++b) {
        const BeamTarget target = b == 0 ? BeamTarget{MouthTarget{}} : BeamTarget{azimuths[b - 1]};
        const auto a = steering_vector(config.geometry, target, hz);
        std::cout << weights.directions[b] << " |response| at " << hz << " Hz = "
                  << std::abs(beam_response(weights, b, bin, a)) << "\n";
    }
}

// --------------------------------------------------------------------- cli

namespace {

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Directional speech pipeline for two-party conversations on smart glasses"};
    app.require_subcommand(1);

    std::optional<std::string> config_path, out_dir, geometry, separator, slm, langs, prompts;
    std::optional<std::uint64_t> seed;
    std::optional<double> sub_rate, alpha;
    bool verbose = false;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration");
        sub->add_option("--seed", seed, "Base random seed");
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--geometry", geometry, "Array geometry JSON");
        sub->add_flag("-v,--verbose", verbose, "Debug logging");
    };

    SimulateRequest sim;
    std::optional<std::string> clips;
    auto* simulate = app.add_subcommand("simulate", "Render spatialized two-speaker scenes");
    common(simulate);
    simulate->add_option("--clips", clips, "Clip manifest JSONL (synthetic demo clips when omitted)");
    simulate->add_option("--count", sim.count, "Number of scenes")->check(CLI::NonNegativeNumber);
    simulate->add_option("--langs", langs, "Wearer and partner languages, e.g. en,es");

    StreamRequest str;
    std::optional<std::string> manifest, wav;
    auto* stream = app.add_subcommand("stream", "Run the streaming pipeline on scenes or a live recording");
    common(stream);
    stream->add_option("--manifest", manifest, "Scene manifest JSONL");
    stream->add_option("--wav", wav, "Multichannel recording without references");
    stream->add_option("--separator", separator, "oracle, passthrough, or host:port");
    stream->add_option("--slm", slm, "oracle, noisy, or host:port");
    stream->add_option("--sub-rate", sub_rate, "Word substitution rate of the noisy mock");
    stream->add_option("--alpha", alpha, "Tagger decision threshold");
    stream->add_option("--langs", langs, "Fallback wearer and partner languages for --wav");
    stream->add_option("--prompts", prompts, "Prompt catalog JSON");

    std::optional<std::string> events, sot_out, separated, report;
    std::string score_manifest;
    auto* score = app.add_subcommand("score", "Score an event log or SOT output against a manifest");
    common(score);
    score->add_option("--events", events, "Event log JSONL from stream");
    score->add_option("--sot", sot_out, "SOT outputs JSONL: {id, transcribe, translate}");
    score->add_option("--manifest", score_manifest, "Scene manifest JSONL")->required();
    score->add_option("--separated", separated, "Directory of separated outputs for SI-SDR");
    score->add_option("--report", report, "Write the report here instead of stdout");

    std::string sot_manifest, task_name = "transcribe";
    auto* sot = app.add_subcommand("sot", "Build SOT training pairs from a manifest");
    common(sot);
    sot->add_option("--manifest", sot_manifest, "Scene manifest JSONL")->required();
    sot->add_option("--task", task_name, "transcribe, translate, or both");

    std::vector<double> azimuths;
    auto* beams = app.add_subcommand("beams", "Design and export fixed beam weights");
    common(beams);
    beams->add_option("--azimuths", azimuths, "Far-field look directions in degrees")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        RunConfig config = config_path ? RunConfig::load(*config_path) : RunConfig{};
        if (seed) config.seed = *seed;
        if (out_dir) config.out = *out_dir;
        if (geometry) config.geometry_path = *geometry;
        if (prompts) config.prompts_path = *prompts;
        if (separator) config.separator = parse_separator_choice(*separator);
        if (slm) {
            const auto prev = config.slm;
            config.slm = parse_slm_choice(*slm);
            config.slm.seed = prev.seed;
            config.slm.sub_rate = prev.sub_rate;
        }
        if (sub_rate) config.slm.sub_rate = *sub_rate;
        if (seed) config.slm.seed = *seed;
        if (alpha) config.tagger.alpha = *alpha;
        if (langs) {
            const auto l = split_csv(*langs);
            if (l.size() != 2) throw ArgumentError("--langs expects two comma-separated codes");
            config.langs = {l[0], l[1]};
        }
        config.finalize();

        if (simulate->parsed()) {
            if (clips) sim.clips = *clips;
            cmd_simulate(config, sim);
        } else if (stream->parsed()) {
            if (manifest) str.manifest = *manifest;
            if (wav) str.wav = *wav;
            cmd_stream(config, str);
        } else if (score->parsed()) {
            ScoreRequest req;
            if (events) req.events = *events;
            if (sot_out) req.sot = *sot_out;
            req.manifest = score_manifest;
            if (separated) req.separated = *separated;
            if (report) req.report = *report;
            cmd_score(config, req);
        } else if (sot->parsed()) {
            cmd_sot(config, SotRequest{sot_manifest, parse_sot_task(task_name)});
        } else if (beams->parsed()) {
            cmd_beams(config, BeamsRequest{azimuths});
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return kExitIo;
    }
    return kExitOk;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"dirspeech"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace dirspeech
