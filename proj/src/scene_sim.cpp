#include "dirspeech/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dirspeech/error.hpp"

namespace dirspeech {

using nlohmann::json;

std::vector<double> direction_grid() {
    std::vector<double> grid;
    for (int k = 0; k < 12; ++k) grid.push_back(-180.0 + 30.0 * k);
    return grid;
}

ArrayGeometry ArrayGeometry::glasses_default() {
    ArrayGeometry g;
    g.mics = {
        {0.07, 0.0, 0.0},
        {-0.07, 0.0, 0.0},
        {0.06, -0.02, 0.01},
        {-0.06, -0.02, 0.01},
        {0.0, 0.0, 0.0},
    };
    g.mouth = {0.0, -0.08, 0.02};
    return g;
}

double distance(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void ArrayGeometry::validate(std::size_t expected_mics) const {
    if (mics.empty()) throw ValidationError("geometry has no microphones");
    if (expected_mics != 0 && mics.size() != expected_mics) {
        throw ValidationError("geometry must have exactly " + std::to_string(expected_mics) +
                              " microphones, got " + std::to_string(mics.size()));
    }
    for (std::size_t i = 0; i < mics.size(); ++i) {
        for (std::size_t j = i + 1; j < mics.size(); ++j) {
            if (distance(mics[i], mics[j]) <= 0.0) {
                throw ValidationError("microphones " + std::to_string(i) + " and " + std::to_string(j) +
                                      " coincide");
            }
        }
    }
}

namespace {
Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ValidationError("geometry coordinates must be [x,y,z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
}  // namespace

ArrayGeometry parse_geometry(std::string_view json_text) {
    try {
        const json j = json::parse(json_text);
        ArrayGeometry g;
        for (const auto& m : j.at("mics")) g.mics.push_back(vec3_from_json(m));
        g.mouth = vec3_from_json(j.at("mouth"));
        g.validate();
        return g;
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("geometry: ") + e.what());
    } catch (const json::exception& e) {
        throw ValidationError(std::string("geometry: ") + e.what());
    }
}

ArrayGeometry load_geometry(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open geometry '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_geometry(ss.str());
}

std::string geometry_to_json(const ArrayGeometry& geometry) {
    json j;
    j["mics"] = json::array();
    for (const auto& m : geometry.mics) j["mics"].push_back({m[0], m[1], m[2]});
    j["mouth"] = {geometry.mouth[0], geometry.mouth[1], geometry.mouth[2]};
    return j.dump(2);
}

Vec3 direction_vector(double azimuth_deg) {
    const double a = azimuth_deg * std::numbers::pi / 180.0;
    return {std::sin(a), 0.0, std::cos(a)};
}

// ---------------------------------------------------------------------------

namespace {

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

void add_fractional_impulse(ImpulseResponse& h, double delay, double gain, std::size_t half_width) {
    const auto hw = static_cast<double>(half_width);
    const auto center = static_cast<std::ptrdiff_t>(std::floor(delay));
    const auto first = std::max<std::ptrdiff_t>(0, center - static_cast<std::ptrdiff_t>(half_width) + 1);
    const auto last = center + static_cast<std::ptrdiff_t>(half_width);
    if (h.size() < static_cast<std::size_t>(last + 1)) h.resize(static_cast<std::size_t>(last + 1), 0.0);
    for (auto n = first; n <= last; ++n) {
        const double x = static_cast<double>(n) - delay;
        if (std::abs(x) >= hw) continue;
        const double taper = 0.5 * (1.0 + std::cos(std::numbers::pi * x / hw));
        h[static_cast<std::size_t>(n)] += gain * sinc(x) * taper;
    }
}

}  // namespace

std::vector<ImpulseResponse> synth_rir_at(const ArrayGeometry& geometry, const Vec3& source,
                                          const RirOptions& options) {
    const double fs = options.sample_rate;
    const Vec3 image{source[0], -2.0 * options.floor_depth - source[1], source[2]};

    std::vector<ImpulseResponse> rirs;
    rirs.reserve(geometry.mics.size());
    for (std::size_t m = 0; m < geometry.mics.size(); ++m) {
        const double r = distance(source, geometry.mics[m]);
        if (r < 1e-6) throw ArgumentError("synth_rir: source coincides with microphone " + std::to_string(m));
        ImpulseResponse h;
        add_fractional_impulse(h, r / kSpeedOfSound * fs, options.ref_distance / r, options.sinc_half_width);
        if (options.reflection_gain != 0.0) {
            const double ri = distance(image, geometry.mics[m]);
            add_fractional_impulse(h, ri / kSpeedOfSound * fs, options.reflection_gain * options.ref_distance / ri,
                                   options.sinc_half_width);
        }
        rirs.push_back(std::move(h));
    }
    return rirs;
}

std::vector<ImpulseResponse> synth_rir(const ArrayGeometry& geometry, double azimuth_deg, double distance_m,
                                       const RirOptions& options) {
    if (!(distance_m > 0.0)) throw ArgumentError("synth_rir: distance must be positive");
    if (azimuth_deg < -180.0 || azimuth_deg >= 180.0) throw ArgumentError("synth_rir: azimuth outside [-180, 180)");
    const Vec3 dir = direction_vector(azimuth_deg);
    return synth_rir_at(geometry, {dir[0] * distance_m, dir[1] * distance_m, dir[2] * distance_m}, options);
}

AudioClip spatialize(const AudioClip& clip, std::span<const ImpulseResponse> rirs) {
    clip.validate();
    if (clip.num_channels() != 1) throw ArgumentError("spatialize: clip must be mono");
    if (rirs.empty()) throw ArgumentError("spatialize: no impulse responses");

    std::size_t longest = 0;
    for (const auto& h : rirs) longest = std::max(longest, h.size());
    const auto& x = clip.channels.front();
    const std::size_t out_len = x.empty() ? 0 : x.size() + (longest == 0 ? 0 : longest - 1);

    AudioClip out = AudioClip::zeros(rirs.size(), out_len, clip.sample_rate);
    for (std::size_t c = 0; c < rirs.size(); ++c) {
        const auto& h = rirs[c];
        auto& y = out.channels[c];
        for (std::size_t k = 0; k < h.size(); ++k) {
            const double g = h[k];
            if (g == 0.0) continue;
            for (std::size_t n = 0; n < x.size(); ++n) y[n + k] += g * x[n];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

void SceneSpec::validate() const {
    for (const auto* src : {&wearer, &partner}) {
        src->audio.validate();
        if (src->audio.num_channels() != 1) throw ArgumentError("scene: source clips must be mono");
        require_canonical_rate(src->audio, "scene source clip");
        if (src->audio.length() == 0) throw ArgumentError("scene: empty source clip");
    }
    if (std::find(kPartnerDirections.begin(), kPartnerDirections.end(), partner_direction) ==
        kPartnerDirections.end()) {
        throw ArgumentError("scene: partner direction must be one of -60, -30, 0, 30, 60 degrees");
    }
    if (!(partner_distance > 0.0)) throw ArgumentError("scene: partner distance must be positive");
    const double shortest = std::min(wearer.audio.duration_s(), partner.audio.duration_s());
    if (overlap_s < 0.0 || overlap_s > shortest) {
        throw ArgumentError("scene: overlap must lie in [0, shortest turn duration]");
    }
    if (!(wearer_rms > 0.0)) throw ArgumentError("scene: wearer level must be positive");
}

namespace {

void place(AudioClip& dst, const AudioClip& src, std::size_t offset, double gain) {
    for (std::size_t c = 0; c < src.num_channels(); ++c) {
        for (std::size_t n = 0; n < src.length(); ++n) dst.channels[c][offset + n] += gain * src.channels[c][n];
    }
}

double energy(std::span<const double> x) {
    double e = 0.0;
    for (double v : x) e += v * v;
    return e;
}

}  // namespace

Scene simulate_scene(const SceneSpec& spec, const ArrayGeometry& geometry) {
    spec.validate();
    geometry.validate();
    const double fs = kSampleRate;

    const auto wearer_rirs = synth_rir_at(geometry, geometry.mouth, spec.rir);
    const auto partner_rirs = synth_rir(geometry, spec.partner_direction, spec.partner_distance, spec.rir);
    const AudioClip wearer_sp = spatialize(spec.wearer.audio, wearer_rirs);
    const AudioClip partner_sp = spatialize(spec.partner.audio, partner_rirs);

    const std::size_t wearer_len = spec.wearer.audio.length();
    const auto overlap = static_cast<std::size_t>(std::llround(spec.overlap_s * fs));
    const std::size_t partner_offset = wearer_len - std::min(overlap, wearer_len);
    const std::size_t total = std::max(wearer_sp.length(), partner_offset + partner_sp.length());

    Scene scene;
    scene.clean_wearer = AudioClip::zeros(kArrayMics, total);
    scene.clean_partner = AudioClip::zeros(kArrayMics, total);
    place(scene.clean_wearer, wearer_sp, 0, 1.0);
    place(scene.clean_partner, partner_sp, partner_offset, 1.0);

    // Level the wearer, then set the partner relative to it, both on mic 0.
    const double we = energy(scene.clean_wearer.channels[0]);
    const double pe = energy(scene.clean_partner.channels[0]);
    if (we <= 0.0 || pe <= 0.0) throw ArgumentError("scene: source clip is silent");
    const double wearer_gain = spec.wearer_rms * std::sqrt(static_cast<double>(total) / we);
    const double partner_gain = wearer_gain * std::sqrt(we / pe) * std::pow(10.0, -spec.snr_db / 20.0);
    for (auto& ch : scene.clean_wearer.channels) for (auto& v : ch) v *= wearer_gain;
    for (auto& ch : scene.clean_partner.channels) for (auto& v : ch) v *= partner_gain;

    scene.noise = AudioClip::zeros(kArrayMics, total);
    if (spec.noise_level_db) {
        const double sigma = spec.wearer_rms * std::pow(10.0, *spec.noise_level_db / 20.0);
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> gauss(0.0, sigma);
        for (auto& ch : scene.noise.channels) for (auto& v : ch) v = gauss(rng);
    }

    scene.mixture = AudioClip::zeros(kArrayMics, total);
    for (std::size_t c = 0; c < kArrayMics; ++c) {
        for (std::size_t n = 0; n < total; ++n) {
            scene.mixture.channels[c][n] =
                scene.clean_wearer.channels[c][n] + scene.clean_partner.channels[c][n] + scene.noise.channels[c][n];
        }
    }

    const double wearer_end = static_cast<double>(wearer_len) / fs;
    const double partner_start = static_cast<double>(partner_offset) / fs;
    const double partner_end = partner_start + spec.partner.audio.duration_s();
    scene.segments.push_back(
        Segment{Role::Wearer, 0.0, wearer_end, spec.wearer.text, spec.wearer.lang, spec.wearer.translation});
    scene.segments.push_back(Segment{Role::Partner, partner_start, partner_end, spec.partner.text,
                                     spec.partner.lang, spec.partner.translation});
    return scene;
}

}  // namespace dirspeech
