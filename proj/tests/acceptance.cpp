// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dirspeech/attribution.hpp"
#include "dirspeech/dsp_core.hpp"
#include "dirspeech/metrics.hpp"
#include "dirspeech/separator.hpp"
#include "dirspeech/slm_stream.hpp"
#include "dirspeech/sot.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

using namespace dirspeech;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

Signal add(const Signal& a, const Signal& b) {
    Signal s(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) s[i] = a[i] + b[i];
    return s;
}

const std::vector<std::pair<std::string, std::string>> kLanguagePairs{{"en", "es"}, {"es", "en"}, {"en", "fr"},
                                                                    {"it", "en"}, {"fr", "it"}};

// ---------------------------------------------------------------------------

Outcome stft_round_trip() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0, elapsed = 0.0;
    for (int i = 0; i < 10; ++i) {
        Signal x(3 * kSampleRate);
        for (auto& v : x) v = u(rng);
        const auto t0 = Clock::now();
        const auto y = istft(stft(x));
        elapsed += seconds_since(t0);
        for (std::size_t n = 0; n < x.size(); ++n) worst = std::max(worst, std::abs(y[n] - x[n]));
    }
    return {worst <= 1e-6 && elapsed < 1.0, fmt("max err %.3g, %.3f s", worst, elapsed)};
}

Outcome streaming_equivalence() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<std::size_t> chunks(1, 20), cut(0, kChunkSamples - 1);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t len = chunks(rng) * kChunkSamples - cut(rng);
        const auto w = oracle::random_signal(len, rng, 0.1);
        const auto p = oracle::random_signal(len, rng, 0.1);
        const auto mix = add(w, p);
        const auto offline = apply_masks(mix, oracle_irm(stft(mix), stft(w), stft(p)));

        StreamingOracleSeparator sep;
        Signal sw, sp;
        for (std::size_t b = 0; b < len; b += kChunkSamples) {
            const std::size_t n = std::min(kChunkSamples, len - b);
            const auto out = sep.process_chunk(std::span(mix).subspan(b, n), std::span(w).subspan(b, n),
                                               std::span(p).subspan(b, n));
            sw.insert(sw.end(), out.wearer.begin(), out.wearer.end());
            sp.insert(sp.end(), out.partner.begin(), out.partner.end());
        }
        const auto tail = sep.finish();
        sw.insert(sw.end(), tail.wearer.begin(), tail.wearer.end());
        sp.insert(sp.end(), tail.partner.begin(), tail.partner.end());
        if (sw.size() != len || sp.size() != len) return {false, "length mismatch in trial " + std::to_string(trial)};
        for (std::size_t n = 0; n < len; ++n) {
            worst = std::max({worst, std::abs(sw[n] - offline.wearer[n]), std::abs(sp[n] - offline.partner[n])});
        }
    }
    return {worst <= 1e-6, fmt("max diff %.3g over 50 trials", worst)};
}

Outcome separation_gain() {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> snr(0.0, 15.0), overlap(0.0, 1.0);
    double total = 0.0;
    for (int i = 0; i < 20; ++i) {
        testscene::Options o;
        o.seed = 3000 + static_cast<std::uint64_t>(i);
        o.direction = kPartnerDirections[static_cast<std::size_t>(i) % kPartnerDirections.size()];
        o.snr_db = snr(rng);
        o.overlap_s = overlap(rng);
        const auto scene = testscene::demo_scene(o);
        const auto& mix = scene.mixture.channels[0];
        const auto& ref = scene.clean_partner.channels[0];
        const auto sep = oracle_separate(mix, scene.clean_wearer.channels[0], ref);
        total += si_sdr(ref, sep.partner) - si_sdr(ref, mix);
    }
    const double mean = total / 20.0;
    return {mean >= 10.0, fmt("mean SI-SDR gain %.2f dB", mean)};
}

// Roles whose reference segments overlap [b, e).
std::vector<SpeakerTag> truth(const std::vector<Segment>& segs, double b, double e) {
    std::vector<SpeakerTag> out;
    for (const auto& s : segs) {
        if (s.start < e && s.end > b) out.push_back(to_tag(s.speaker));
    }
    return out;
}

Outcome tagger_accuracy() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> level(6.0, 15.0);
    std::bernoulli_distribution sign(0.5);
    const TaggerConfig cfg;
    std::size_t speech = 0, correct = 0, covariance_checks = 0, covariance_breaks = 0;
    for (int i = 0; i < 20; ++i) {
        testscene::Options o;
        o.seed = 4000 + static_cast<std::uint64_t>(i);
        o.direction = kPartnerDirections[static_cast<std::size_t>(i) % kPartnerDirections.size()];
        o.snr_db = sign(rng) ? level(rng) : -level(rng);
        const auto scene = testscene::demo_scene(o);
        const auto sep = oracle_separate(scene.mixture.channels[0], scene.clean_wearer.channels[0],
                                         scene.clean_partner.channels[0]);
        const std::size_t len = sep.wearer.size();
        for (std::size_t b = 0; b < len; b += kChunkSamples) {
            const std::size_t n = std::min(kChunkSamples, len - b);
            const auto w = std::span<const double>(sep.wearer).subspan(b, n);
            const auto p = std::span<const double>(sep.partner).subspan(b, n);
            const auto tag = tag_chunk(w, p, cfg);

            const auto roles = truth(scene.segments, static_cast<double>(b) / kSampleRate,
                                     static_cast<double>(b + n) / kSampleRate);
            if (!roles.empty()) {
                ++speech;
                correct += std::find(roles.begin(), roles.end(), tag) != roles.end();
            }

            if (std::max(frame_rms(w), frame_rms(p)) * 0.1 < cfg.vad_floor) continue;
            ++covariance_checks;
            for (double c : {0.1, 1.0, 10.0}) {
                Signal sw(w.begin(), w.end()), sp(p.begin(), p.end());
                for (auto& v : sw) v *= c;
                for (auto& v : sp) v *= c;
                if (tag_chunk(sw, sp, cfg) != tag) {
                    ++covariance_breaks;
                    break;
                }
            }
        }
    }
    const double acc = speech ? static_cast<double>(correct) / static_cast<double>(speech) : 0.0;
    const bool ok = acc >= 0.95 && covariance_breaks == 0 && covariance_checks > 0;
    return {ok, fmt("accuracy %.2f%% over %.0f speech chunks", 100.0 * acc, static_cast<double>(speech)) + ", " +
                    std::to_string(covariance_breaks) + "/" + std::to_string(covariance_checks) +
                    " gain-dependent decisions"};
}

SceneHypothesis hypothesis_from(const std::vector<StreamEvent>& events) {
    SceneHypothesis h;
    h.has_translation = true;
    for (const auto& e : events) {
        auto& runs = e.task == SlmTask::Transcribe ? h.transcript : h.translation;
        const Role r = e.tag == SpeakerTag::Wearer ? Role::Wearer : Role::Partner;
        if (!runs.empty() && runs.back().speaker == r) runs.back().text += " " + e.text;
        else runs.push_back({r, e.text});
    }
    return h;
}

testscene::Options bilingual_scene(int i) {
    testscene::Options o;
    o.seed = 5000 + static_cast<std::uint64_t>(i);
    o.direction = kPartnerDirections[static_cast<std::size_t>(i) % kPartnerDirections.size()];
    o.snr_db = static_cast<double>(i % 4) * 3.0 - 3.0;
    o.wearer_words = 4 + static_cast<std::size_t>(i % 3);
    o.partner_words = 5 + static_cast<std::size_t>(i % 4);
    o.wearer_lang = kLanguagePairs[static_cast<std::size_t>(i) % kLanguagePairs.size()].first;
    o.partner_lang = kLanguagePairs[static_cast<std::size_t>(i) % kLanguagePairs.size()].second;
    return o;
}

ScoreReport run_pipeline(const MockSlmMode& mode) {
    ScoreReport report;
    StreamConfig cfg;
    cfg.geometry = ArrayGeometry::glasses_default();
    for (int i = 0; i < 10; ++i) {
        const auto o = bilingual_scene(i);
        const auto scene = testscene::demo_scene(o);
        const auto input = stream_input_from_scene("scene" + std::to_string(i), scene, {o.wearer_lang, o.partner_lang});
        OracleSeparatorBackend sep;
        MockSlm slm(scene.segments, mode);
        const auto result = run_stream(input, sep, slm, cfg);
        add_scene(report, scene.segments, hypothesis_from(result.events));
    }
    return report;
}

Outcome end_to_end() {
    const auto report = run_pipeline(MockSlmMode::oracle());
    const double sa_w = report.wearer.sa_pct(), sa_p = report.partner.sa_pct();
    const double wer_w = report.wearer.wer.wer_pct(), wer_p = report.partner.wer.wer_pct();

    // 60 s of 5-channel audio through the same pipeline.
    testscene::Options o;
    o.seed = 5999;
    o.wearer_words = 75;
    o.partner_words = 75;
    const auto scene = testscene::demo_scene(o);
    auto input = stream_input_from_scene("long", scene, {o.wearer_lang, o.partner_lang});
    const std::size_t minute = 60 * kSampleRate;
    for (auto* clip : {&input.mixture, &input.clean_wearer, &input.clean_partner}) {
        for (auto& ch : clip->channels) ch.resize(minute, 0.0);
    }
    OracleSeparatorBackend sep;
    MockSlm slm(scene.segments);
    StreamConfig cfg;
    cfg.geometry = ArrayGeometry::glasses_default();
    const auto t0 = Clock::now();
    run_stream(input, sep, slm, cfg);
    const double wall = seconds_since(t0);

    const bool ok = sa_w == 0.0 && sa_p == 0.0 && wer_w == 0.0 && wer_p == 0.0 && wall < 60.0;
    return {ok, fmt("SA %.1f%%/%.1f%%", sa_w, sa_p) + fmt(", WER %.1f%%/%.1f%%", wer_w, wer_p) +
                    fmt(", 60 s processed in %.2f s", wall)};
}

std::vector<oracle::Words> all_sequences(std::size_t max_len, const oracle::Words& vocab) {
    std::vector<oracle::Words> out{{}};
    std::size_t begin = 0;
    for (std::size_t len = 1; len <= max_len; ++len) {
        const std::size_t end = out.size();
        for (std::size_t i = begin; i < end; ++i) {
            for (const auto& v : vocab) {
                auto w = out[i];
                w.push_back(v);
                out.push_back(std::move(w));
            }
        }
        begin = end;
    }
    return out;
}

Outcome metric_oracles() {
    std::vector<std::string> failures;

    const auto seqs = all_sequences(5, {"a", "b", "c"});
    std::size_t wer_bad = 0;
    for (const auto& r : seqs) {
        for (const auto& h : seqs) {
            const auto got = wer(r, h);
            const auto want = oracle::exhaustive_wer(r, h);
            if (got.errors() != want.total || got.sub != want.sub || got.ins != want.ins) ++wer_bad;
        }
    }
    if (wer_bad) failures.push_back("wer " + std::to_string(wer_bad) + " mismatches");

    std::mt19937_64 rng(606);
    std::uniform_int_distribution<int> len(0, 3), hyp_len(0, 6), tok(0, 2), coin(0, 1);
    const oracle::Words vocab{"a", "b", "c"};
    std::size_t sa_bad = 0;
    for (int trial = 0; trial < 200; ++trial) {
        oracle::Words rw, rp;
        for (int k = len(rng); k > 0; --k) rw.push_back(vocab[tok(rng)]);
        for (int k = len(rng); k > 0; --k) rp.push_back(vocab[tok(rng)]);
        std::vector<oracle::TaggedWord> hyp;
        std::vector<SpeakerRun> runs;
        for (int k = hyp_len(rng); k > 0; --k) {
            const bool wearer = coin(rng);
            const auto& w = vocab[tok(rng)];
            hyp.push_back({w, wearer});
            runs.push_back({wearer ? Role::Wearer : Role::Partner, w});
        }
        const auto got = sa_wer({{Role::Wearer, join_words(rw)}, {Role::Partner, join_words(rp)}}, runs);
        const auto want = oracle::brute_force_sa(rw, rp, hyp);
        if (got.migrated_wearer != want.moved_to_wearer || got.migrated_partner != want.moved_to_partner) ++sa_bad;
    }
    if (sa_bad) failures.push_back("sa_wer " + std::to_string(sa_bad) + " mismatches");

    const auto s = oracle::random_signal(16000, rng);
    auto n = oracle::random_signal(16000, rng);
    double sn = 0.0, ss = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) sn += s[i] * n[i], ss += s[i] * s[i];
    for (std::size_t i = 0; i < s.size(); ++i) n[i] -= sn / ss * s[i];
    for (double v : n) nn += v * v;
    const double g = std::sqrt(ss / (10.0 * nn));
    Signal est(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) est[i] = s[i] + g * n[i];
    const double sdr = si_sdr(s, est);
    if (std::abs(sdr - 10.0) > 1e-6) failures.push_back(fmt("si_sdr %.9f", sdr));

    const auto ident = split_words("the quick brown fox jumps over the lazy dog");
    if (std::abs(bleu({ident}, ident) - 1.0) > 1e-12) failures.push_back("bleu identity");
    const double hand = std::pow((1.0 / 4) * (1.0 / 4) * (1.0 / 3) * (1.0 / 2), 0.25);
    const double clipped = bleu({split_words("the cat")}, split_words("the the the the"));
    if (std::abs(clipped - hand) > 1e-6) failures.push_back(fmt("bleu clipped %.6f vs %.6f", clipped, hand));

    if (!failures.empty()) {
        std::string d;
        for (const auto& f : failures) d += (d.empty() ? "" : "; ") + f;
        return {false, d};
    }
    return {true, std::to_string(seqs.size() * seqs.size()) + " wer pairs, 200 sa cases" +
                      fmt(", si_sdr %.9f dB", sdr) + fmt(", clipped bleu %.6f", clipped)};
}

Outcome sot_codec() {
    std::mt19937_64 rng(707);
    std::uniform_int_distribution<int> count(1, 10), words(1, 5), vocab(0, 20), coin(0, 1), start(0, 40);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<AttributedSegment> segs;
        for (int i = count(rng); i > 0; --i) {
            Words text;
            for (int k = words(rng); k > 0; --k) text.push_back("w" + std::to_string(vocab(rng)));
            segs.push_back({coin(rng) ? Role::Wearer : Role::Partner, 0.25 * start(rng), text, "en"});
        }
        auto sorted = segs;
        std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
            return a.start_s < b.start_s || (a.start_s == b.start_s && a.speaker < b.speaker);
        });
        std::vector<SpeakerRun> expect;
        std::size_t changes = 0;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const auto text = join_words(sorted[i].text);
            if (i > 0 && sorted[i].speaker == sorted[i - 1].speaker) {
                expect.back().text += " " + text;
            } else {
                if (i > 0) ++changes;
                expect.push_back({sorted[i].speaker, text});
            }
        }
        const auto seq = serialize_sot(segs);
        const auto back = parse_sot(SotSequence::from_string(seq.str()), SotParseMode::Strict);
        if (back.runs != expect) return {false, "round trip differs in trial " + std::to_string(trial)};
        if (seq.change_count() != changes) return {false, "change count differs in trial " + std::to_string(trial)};
    }
    return {true, "1000 randomized segment lists"};
}

// Runs the fuzz and returns a digest of every observable state, or throws on a violation.
std::uint64_t window_fuzz(std::uint64_t seed, std::string& violation) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> op(0, 2);
    std::uniform_int_distribution<std::size_t> len(1, 2 * kChunkSamples), nwords(0, 15);
    SlidingWindow window;
    std::deque<std::pair<double, std::size_t>> shadow;  // every chunk ever pushed that should still be present
    std::uint64_t next_word = 0;
    std::deque<std::uint64_t> shadow_words;
    double t = 0.0;
    std::uint64_t digest = 1469598103934665603ULL;
    auto mix = [&](std::uint64_t v) { digest = (digest ^ v) * 1099511628211ULL; };

    for (int i = 0; i < 10000; ++i) {
        if (op(rng) < 2) {
            const std::size_t n = len(rng);
            t += static_cast<double>(n) / kSampleRate;
            Signal chunk(n, static_cast<double>(i));
            const std::size_t evicted = window.push_chunk(std::move(chunk), t);
            shadow.emplace_back(t, n);
            std::size_t total = 0;
            for (const auto& s : shadow) total += s.second;
            std::size_t expect_evicted = 0;
            while (total > window.max_samples()) {
                total -= shadow.front().second;
                shadow.pop_front();
                ++expect_evicted;
            }
            if (evicted != expect_evicted) violation = "eviction count at op " + std::to_string(i);
            if (window.chunks().size() != shadow.size()) violation = "chunk count at op " + std::to_string(i);
            for (std::size_t k = 0; k < shadow.size() && violation.empty(); ++k) {
                if (window.chunks()[k].timestamp_s != shadow[k].first) violation = "non-FIFO eviction at op " + std::to_string(i);
            }
            mix(evicted);
            mix(window.samples());
        } else {
            Words w;
            for (std::size_t k = nwords(rng); k > 0; --k) {
                w.push_back("t" + std::to_string(next_word));
                shadow_words.push_back(next_word++);
            }
            window.append_history(w);
            while (shadow_words.size() > kMaxHistoryWords) shadow_words.pop_front();
            const auto& h = window.history();
            if (h.size() != shadow_words.size()) violation = "history size at op " + std::to_string(i);
            for (std::size_t k = 0; k < h.size() && violation.empty(); ++k) {
                if (h[k] != "t" + std::to_string(shadow_words[k])) violation = "history order at op " + std::to_string(i);
            }
            mix(h.size());
        }
        if (window.duration_s() > kMaxWindowSeconds + 1e-12) violation = "duration bound at op " + std::to_string(i);
        if (window.history().size() > kMaxHistoryWords) violation = "word bound at op " + std::to_string(i);
        if (!violation.empty()) return digest;
    }
    for (double v : window.audio()) mix(static_cast<std::uint64_t>(v));
    return digest;
}

Outcome sliding_window_fuzz() {
    std::string v1, v2;
    const auto d1 = window_fuzz(808, v1);
    const auto d2 = window_fuzz(808, v2);
    if (!v1.empty()) return {false, v1};
    if (d1 != d2) return {false, "runs differ under a fixed seed"};
    return {true, "10000 ops, bounds and FIFO order held, digest " + std::to_string(d1 % 1000000)};
}

Outcome noisy_monotonicity() {
    std::vector<double> wers;
    double worst_sa = 0.0;
    for (double rate : {0.0, 0.1, 0.3}) {
        const auto r = run_pipeline(MockSlmMode::noisy(909, rate));
        auto total = r.wearer.wer;
        total += r.partner.wer;
        wers.push_back(total.wer_pct());
        worst_sa = std::max({worst_sa, r.wearer.sa_pct(), r.partner.sa_pct()});
    }
    const bool ok = wers[0] < wers[1] && wers[1] < wers[2] && worst_sa == 0.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "WER %.1f%% < %.1f%% < %.1f%%, max SA %.1f%%", wers[0], wers[1], wers[2], worst_sa);
    return {ok, buf};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"stft round trip", stft_round_trip},
        {"streaming/offline separation equivalence", streaming_equivalence},
        {"oracle separation improvement", separation_gain},
        {"tagger accuracy and scale covariance", tagger_accuracy},
        {"end-to-end oracle pipeline", end_to_end},
        {"metric oracles", metric_oracles},
        {"sot codec", sot_codec},
        {"sliding-window fuzz", sliding_window_fuzz},
        {"noisy-mock monotonicity", noisy_monotonicity},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
