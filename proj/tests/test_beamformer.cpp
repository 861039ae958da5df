#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "dirspeech/beamformer.hpp"
#include "dirspeech/dsp_core.hpp"
#include "dirspeech/error.hpp"
#include "support/oracles.hpp"

using namespace dirspeech;

namespace {

double energy(const Signal& x) {
    double e = 0.0;
    for (double v : x) e += v * v;
    return e;
}

AudioClip random_clip(std::size_t channels, std::size_t len, std::mt19937_64& rng) {
    AudioClip c = AudioClip::zeros(channels, len);
    for (auto& ch : c.channels) ch = oracle::random_signal(len, rng, 0.2);
    return c;
}

}  // namespace

TEST_CASE("single-mic geometry gives unit weights") {
    ArrayGeometry g;
    g.mics = {{0.01, 0.02, 0.03}};
    for (const BeamTarget& t : {BeamTarget{0.0}, BeamTarget{60.0}, BeamTarget{MouthTarget{}}}) {
        const auto w = design_delay_and_sum(g, t);
        REQUIRE(w.size() == 257);
        for (const auto& c : w) CHECK(std::abs(c - Complex(1.0, 0.0)) < 1e-12);
    }
}

TEST_CASE("symmetric pair weights") {
    ArrayGeometry pair;
    pair.mics = {{0.07, 0.0, 0.0}, {-0.07, 0.0, 0.0}};
    for (double az : {0.0, 90.0, 30.0}) {
        const auto w = design_delay_and_sum(pair, az);
        for (std::size_t f = 0; f < 257; ++f) {
            CHECK(std::abs(w[f * 2] - std::conj(w[f * 2 + 1])) < 1e-12);
        }
    }
    const auto w90 = design_delay_and_sum(pair, 90.0);
    CHECK(std::abs(std::arg(w90[100 * 2])) > 0.1);

    const auto g = ArrayGeometry::glasses_default();
    const auto w = design_delay_and_sum(g, 0.0);
    for (std::size_t f = 0; f < 257; ++f) CHECK(std::abs(std::abs(w[f * 5]) - std::abs(w[f * 5 + 1])) < 1e-12);
}

TEST_CASE("distortionless toward the steering point, attenuated elsewhere") {
    const auto g = ArrayGeometry::glasses_default();
    const auto beams = design_default_beams(g);
    REQUIRE(beams.num_beams() == 6);
    CHECK(beams.directions[0] == beam_label(MouthTarget{}));
    for (std::size_t b = 0; b < beams.num_beams(); ++b) {
        const BeamTarget target = b == 0 ? BeamTarget{MouthTarget{}} : BeamTarget{kPartnerDirections[b - 1]};
        for (std::size_t f = 0; f < 257; ++f) {
            const auto a = steering_vector(g, target, f * 16000.0 / 512.0);
            CHECK(std::abs(beam_response(beams, b, f, a) - Complex(1.0, 0.0)) < 1e-9);
        }
    }
    // Beam at 0 degrees listening to 90 degrees at 4 kHz (bin 128).
    const auto off = steering_vector(g, 90.0, 4000.0);
    CHECK(std::abs(beam_response(beams, 3, 128, off)) < 1.0);
}

TEST_CASE("apply_beams: selection, zeros, channel mismatch") {
    std::mt19937_64 rng(2);
    const auto mix = random_clip(5, 7000, rng);

    BeamWeights pick;
    pick.directions = {"mic2"};
    pick.num_mics = 5;
    pick.weights.assign(1, std::vector<Complex>(257 * 5, Complex{}));
    for (std::size_t f = 0; f < 257; ++f) pick.weights[0][f * 5 + 2] = 1.0;
    const auto out = apply_beams(mix, pick);
    REQUIRE(out.num_channels() == 1);
    REQUIRE(out.length() == 7000);
    double err = 0.0;
    for (std::size_t i = 0; i < 7000; ++i) err = std::max(err, std::abs(out.channels[0][i] - mix.channels[2][i]));
    CHECK(err <= 1e-6);

    BeamWeights zero = pick;
    zero.weights[0].assign(257 * 5, Complex{});
    const auto silent = apply_beams(mix, zero);
    for (double v : silent.channels[0]) CHECK(v == 0.0);

    CHECK_THROWS_AS(apply_beams(random_clip(4, 100, rng), pick), ArgumentError);
}

TEST_CASE("apply_beams is linear") {
    std::mt19937_64 rng(6);
    const auto beams = design_default_beams(ArrayGeometry::glasses_default());
    const auto x = random_clip(5, 5000, rng);
    const auto y = random_clip(5, 5000, rng);
    AudioClip z = AudioClip::zeros(5, 5000);
    for (std::size_t m = 0; m < 5; ++m) {
        for (std::size_t i = 0; i < 5000; ++i) z.channels[m][i] = 0.7 * x.channels[m][i] - 1.3 * y.channels[m][i];
    }
    const auto bx = apply_beams(x, beams), by = apply_beams(y, beams), bz = apply_beams(z, beams);
    double err = 0.0;
    for (std::size_t b = 0; b < 6; ++b) {
        for (std::size_t i = 0; i < 5000; ++i) {
            err = std::max(err, std::abs(bz.channels[b][i] - (0.7 * bx.channels[b][i] - 1.3 * by.channels[b][i])));
        }
    }
    CHECK(err <= 1e-6);
}

TEST_CASE("steered source keeps its level through the beam") {
    const auto g = ArrayGeometry::glasses_default();
    std::mt19937_64 rng(12);
    // Band-limited source: smooth white noise so the fractional-delay RIR is accurate.
    auto src = oracle::random_signal(32000, rng, 0.1);
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = src.size() - 1; i > 0; --i) src[i] = 0.5 * (src[i] + src[i - 1]);
    }
    const auto rirs = synth_rir_at(g, g.mouth);
    const auto captured = spatialize(AudioClip::mono(src), rirs);
    const auto beams = design_default_beams(g);
    const auto mouth = select_mouth_beam(apply_beams(captured, beams));

    Vec3 c{0, 0, 0};
    for (const auto& p : g.mics) {
        for (int k = 0; k < 3; ++k) c[k] += p[k] / 5.0;
    }
    // At the centroid the source would arrive with amplitude 1 / r_ref.
    const double r_ref = distance(g.mouth, c);
    const double level_db = 10.0 * std::log10(energy(mouth.channels[0]) / (energy(src) / (r_ref * r_ref)));
    CHECK(std::abs(level_db) <= 0.5);
}

TEST_CASE("beam toward a partner beats the best single mic against a 90 degree interferer") {
    const auto g = ArrayGeometry::glasses_default();
    std::mt19937_64 rng(13);
    const auto target = spatialize(AudioClip::mono(oracle::random_signal(32000, rng, 0.1)), synth_rir(g, -60.0, 1.5));
    const auto interf = spatialize(AudioClip::mono(oracle::random_signal(32000, rng, 0.1)), synth_rir(g, 30.0, 1.5));
    const auto beams = design_beams(g, {-60.0});
    const auto bt = apply_beams(target, beams);
    const auto bi = apply_beams(interf, beams);
    const double beam_sir = energy(bt.channels[1]) / energy(bi.channels[1]);
    double best_mic = 0.0;
    for (std::size_t m = 0; m < 5; ++m) best_mic = std::max(best_mic, energy(target.channels[m]) / energy(interf.channels[m]));
    CHECK(beam_sir > best_mic);
}

TEST_CASE("select_mouth_beam") {
    std::mt19937_64 rng(1);
    const auto five = random_clip(5, 100, rng);
    const auto m = select_mouth_beam(five);
    CHECK(m.num_channels() == 1);
    CHECK(m.channels[0] == five.channels[0]);
    const auto mono = random_clip(1, 50, rng);
    CHECK(select_mouth_beam(mono).channels == mono.channels);
}

TEST_CASE("beam weight files round trip") {
    const auto beams = design_default_beams(ArrayGeometry::glasses_default());
    const auto path = std::filesystem::temp_directory_path() / "dirspeech_beams_test.json";
    save_beam_weights(beams, path);
    const auto back = load_beam_weights(path);
    CHECK(back.directions == beams.directions);
    CHECK(back.params == beams.params);
    REQUIRE(back.num_beams() == beams.num_beams());
    for (std::size_t b = 0; b < beams.num_beams(); ++b) {
        for (std::size_t i = 0; i < beams.weights[b].size(); ++i) {
            REQUIRE(std::abs(back.weights[b][i] - beams.weights[b][i]) < 1e-12);
        }
    }
}
