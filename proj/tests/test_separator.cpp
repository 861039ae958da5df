#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dirspeech/dsp_core.hpp"
#include "dirspeech/error.hpp"
#include "dirspeech/separator.hpp"
#include "support/oracles.hpp"
#include "support/servers.hpp"

using namespace dirspeech;
using namespace std::chrono_literals;

namespace {

double max_abs_diff(const Signal& a, const Signal& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Signal add(const Signal& a, const Signal& b) {
    Signal s(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) s[i] = a[i] + b[i];
    return s;
}

void append(Separated& acc, const Separated& part) {
    acc.wearer.insert(acc.wearer.end(), part.wearer.begin(), part.wearer.end());
    acc.partner.insert(acc.partner.end(), part.partner.begin(), part.partner.end());
}

Separated run_chunked(const Signal& mix, const Signal& w, const Signal& p, bool call_finish) {
    StreamingOracleSeparator sep;
    Separated out;
    for (std::size_t b = 0; b < mix.size(); b += kChunkSamples) {
        const std::size_t n = std::min(kChunkSamples, mix.size() - b);
        append(out, sep.process_chunk(std::span(mix).subspan(b, n), std::span(w).subspan(b, n),
                                      std::span(p).subspan(b, n)));
    }
    if (call_finish) append(out, sep.finish());
    return out;
}

}  // namespace

TEST_CASE("oracle_irm: range, complement and silent bins") {
    std::mt19937_64 rng(1);
    const auto w = oracle::random_signal(4000, rng);
    const auto p = oracle::random_signal(4000, rng);
    const auto masks = oracle_irm(stft(add(w, p)), stft(w), stft(p));
    CHECK_NOTHROW(masks.validate());
    for (std::size_t i = 0; i < masks.wearer.size(); ++i) {
        REQUIRE(masks.wearer[i] + masks.partner[i] <= 1.0);
        REQUIRE(masks.wearer[i] + masks.partner[i] > 1.0 - 1e-6);
    }

    const Signal zero(4000, 0.0);
    const auto silent = oracle_irm(stft(zero), stft(zero), stft(zero));
    for (std::size_t i = 0; i < silent.wearer.size(); ++i) {
        REQUIRE(silent.wearer[i] == 0.0);
        REQUIRE(silent.partner[i] == 0.0);
    }

    CHECK_THROWS_AS(oracle_irm(stft(w), stft(Signal(100, 0.1)), stft(p)), ArgumentError);
}

TEST_CASE("MaskPair validation") {
    MaskPair m{1, 2, {0.5, 0.5}, {0.2, 1.1}};
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m.partner = {0.2};
    CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("apply_masks: unit masks reconstruct, zero masks silence") {
    std::mt19937_64 rng(2);
    const auto x = oracle::random_signal(7000, rng);
    const auto spec = stft(x);
    MaskPair ones{spec.frames, spec.bins(), std::vector<double>(spec.data.size(), 1.0),
                  std::vector<double>(spec.data.size(), 0.0)};
    const auto out = apply_masks(x, ones);
    CHECK(max_abs_diff(out.wearer, x) <= 1e-6);
    for (double v : out.partner) REQUIRE(v == 0.0);

    MaskPair wrong = ones;
    wrong.frames -= 1;
    CHECK_THROWS_AS(apply_masks(x, wrong), ArgumentError);
}

TEST_CASE("oracle_separate: single-source scenes and silence") {
    std::mt19937_64 rng(3);
    const auto w = oracle::random_signal(9600 * 2, rng);
    const Signal zero(w.size(), 0.0);
    const auto only_w = oracle_separate(w, w, zero);
    CHECK(max_abs_diff(only_w.wearer, w) <= 1e-6);
    for (double v : only_w.partner) REQUIRE(std::abs(v) <= 1e-6);

    const auto silent = oracle_separate(zero, zero, zero);
    for (double v : silent.wearer) REQUIRE(v == 0.0);
    CHECK_THROWS_AS(oracle_separate(w, zero, Signal(5, 0.0)), ArgumentError);
}

TEST_CASE("streaming separation equals offline separation") {
    std::mt19937_64 rng(4);
    for (std::size_t len : {9600u, 9600u * 3, 9600u * 2 + 1234, 700u, 9599u}) {
        const auto w = oracle::random_signal(len, rng);
        const auto p = oracle::random_signal(len, rng);
        const auto mix = add(w, p);
        const auto offline = oracle_separate(mix, w, p);
        const auto streamed = run_chunked(mix, w, p, true);
        CHECK(max_abs_diff(streamed.wearer, offline.wearer) <= 1e-6);
        CHECK(max_abs_diff(streamed.partner, offline.partner) <= 1e-6);
    }
}

TEST_CASE("streaming separator: latency, short final chunk, finish idempotent") {
    std::mt19937_64 rng(5);
    const auto w = oracle::random_signal(9600 * 2 + 50, rng);
    const auto p = oracle::random_signal(w.size(), rng);
    const auto mix = add(w, p);

    StreamingOracleSeparator sep;
    const auto first = sep.process_chunk(std::span(mix).first(9600), std::span(w).first(9600),
                                         std::span(p).first(9600));
    CHECK(first.wearer.size() == 9600 - 240);
    CHECK(sep.state().chunk_index == 1);
    CHECK_FALSE(sep.state().finished);
    sep.process_chunk(std::span(mix).subspan(9600, 9600), std::span(w).subspan(9600, 9600),
                      std::span(p).subspan(9600, 9600));
    // The 50-sample chunk is short, so it ends the stream.
    const auto last = sep.process_chunk(std::span(mix).subspan(19200), std::span(w).subspan(19200),
                                        std::span(p).subspan(19200));
    CHECK(last.wearer.size() == 50 + 240);
    CHECK(sep.state().finished);
    CHECK(sep.state().emitted == mix.size());
    CHECK(sep.finish().wearer.empty());
    CHECK(sep.finish().partner.empty());
    CHECK_THROWS_AS(sep.process_chunk(std::span(mix).first(10), std::span(w).first(10), std::span(p).first(10)),
                    ArgumentError);

    // Without finish(), an exact multiple of the chunk size leaves the tail pending.
    const auto whole = run_chunked(Signal(mix.begin(), mix.begin() + 19200), Signal(w.begin(), w.begin() + 19200),
                                   Signal(p.begin(), p.begin() + 19200), false);
    CHECK(whole.wearer.size() == 19200 - 240);
}

TEST_CASE("streaming separator: argument checks") {
    StreamingOracleSeparator sep;
    const Signal big(9601, 0.0), small(100, 0.0), other(99, 0.0);
    CHECK_THROWS_AS(sep.process_chunk(big, big, big), ArgumentError);
    CHECK_THROWS_AS(sep.process_chunk(small, other, small), ArgumentError);
    CHECK(sep.process_chunk(Signal{}, Signal{}, Signal{}).wearer.empty());
    CHECK(sep.state().chunk_index == 0);
}

TEST_CASE("oracle backend needs references, passthrough copies the mixture") {
    OracleSeparatorBackend oracle_backend;
    const Signal x(9600, 0.1);
    CHECK_THROWS_AS(oracle_backend.process(0, x, {}, {}), ConfigError);

    PassthroughSeparatorBackend pass;
    const auto out = pass.process(0, x, {}, {});
    CHECK(out.wearer == x);
    CHECK(out.partner == Signal(x.size(), 0.0));
}

TEST_CASE("external separator: round trip and out-of-order responses") {
    testsrv::LineServer server(testsrv::splitting_separator(0.75), 3);
    ExternalSeparator client(server.endpoint(), 1000ms);
    std::mt19937_64 rng(6);
    std::vector<Signal> chunks;
    for (std::size_t i = 0; i < 3; ++i) {
        chunks.push_back(oracle::random_signal(9600, rng));
        client.submit(i, chunks.back());
    }
    for (std::size_t i = 0; i < 3; ++i) {
        const auto out = client.collect(i);
        REQUIRE(out.wearer.size() == 9600);
        for (std::size_t n = 0; n < 9600; ++n) {
            REQUIRE(out.wearer[n] == doctest::Approx(0.75 * chunks[i][n]));
            REQUIRE(out.partner[n] == doctest::Approx(0.25 * chunks[i][n]));
        }
    }
    CHECK(server.requests() == 3);
}

TEST_CASE("external separator: protocol violations are backend errors") {
    testsrv::LineServer wrong_len([](const std::string& line) -> std::optional<std::string> {
        const auto req = nlohmann::json::parse(line);
        return nlohmann::json{{"chunk_idx", req.at("chunk_idx")}, {"wearer", {0.0}}, {"partner", {0.0}}}.dump();
    });
    ExternalSeparator a(wrong_len.endpoint(), 500ms);
    CHECK_THROWS_AS(a.separate(0, Signal(10, 0.1)), BackendError);

    testsrv::LineServer garbage([](const std::string&) -> std::optional<std::string> { return "not json"; });
    ExternalSeparator b(garbage.endpoint(), 500ms);
    CHECK_THROWS_AS(b.separate(0, Signal(10, 0.1)), BackendError);

    testsrv::LineServer silent([](const std::string&) -> std::optional<std::string> { return std::nullopt; });
    ExternalSeparator c(silent.endpoint(), 100ms);
    CHECK_THROWS_AS(c.separate(0, Signal(10, 0.1)), BackendError);
}

TEST_CASE("external backend falls back to passthrough on timeout") {
    testsrv::LineServer silent([](const std::string&) -> std::optional<std::string> { return std::nullopt; });
    ExternalSeparatorBackend backend(silent.endpoint(), 100ms);
    const Signal x(960, 0.2);
    const auto out = backend.process(0, x, {}, {});
    CHECK(out.wearer == x);
    CHECK(out.partner == Signal(960, 0.0));
    CHECK(backend.failures() == 1);
}

TEST_CASE("external separator: unreachable endpoint") {
    Endpoint nowhere;
    {
        LineListener l;
        nowhere = l.endpoint();
    }
    CHECK_THROWS_AS(ExternalSeparator(nowhere, 200ms), BackendError);
}
