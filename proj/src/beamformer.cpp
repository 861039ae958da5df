#include "dirspeech/beamformer.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "dirspeech/error.hpp"

namespace dirspeech {

using nlohmann::json;

namespace {

Vec3 centroid(const ArrayGeometry& g) {
    Vec3 c{0.0, 0.0, 0.0};
    for (const auto& m : g.mics) {
        for (int k = 0; k < 3; ++k) c[k] += m[k];
    }
    for (auto& v : c) v /= static_cast<double>(g.mics.size());
    return c;
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

std::string beam_label(const BeamTarget& target) {
    if (std::holds_alternative<MouthTarget>(target)) return "mouth";
    std::ostringstream s;
    s << std::get<double>(target);
    return s.str();
}

std::vector<Complex> steering_vector(const ArrayGeometry& geometry, const BeamTarget& target, double freq_hz) {
    const Vec3 ref = centroid(geometry);
    const double omega = 2.0 * std::numbers::pi * freq_hz;
    std::vector<Complex> a(geometry.mics.size());

    if (std::holds_alternative<MouthTarget>(target)) {
        const double r_ref = distance(geometry.mouth, ref);
        for (std::size_t m = 0; m < a.size(); ++m) {
            const double r = distance(geometry.mouth, geometry.mics[m]);
            const double tau = (r - r_ref) / kSpeedOfSound;
            a[m] = (r_ref / r) * std::polar(1.0, -omega * tau);
        }
    } else {
        const Vec3 u = direction_vector(std::get<double>(target));
        for (std::size_t m = 0; m < a.size(); ++m) {
            const Vec3& p = geometry.mics[m];
            const Vec3 rel{p[0] - ref[0], p[1] - ref[1], p[2] - ref[2]};
            // Mics further along u hear the plane wave earlier.
            const double tau = -dot(u, rel) / kSpeedOfSound;
            a[m] = std::polar(1.0, -omega * tau);
        }
    }
    return a;
}

std::vector<Complex> design_delay_and_sum(const ArrayGeometry& geometry, const BeamTarget& target,
                                          const StftParams& params, int sample_rate) {
    geometry.validate(0);
    params.validate();
    const std::size_t mics = geometry.mics.size();
    std::vector<Complex> w(params.bins() * mics);
    for (std::size_t f = 0; f < params.bins(); ++f) {
        const double hz = static_cast<double>(f) * sample_rate / static_cast<double>(params.fft_size);
        const auto a = steering_vector(geometry, target, hz);
        double norm = 0.0;
        for (const auto& v : a) norm += std::norm(v);
        for (std::size_t m = 0; m < mics; ++m) w[f * mics + m] = std::conj(a[m]) / norm;
    }
    return w;
}

BeamWeights design_beams(const ArrayGeometry& geometry, const std::vector<double>& azimuths,
                         const StftParams& params) {
    BeamWeights bw;
    bw.params = params;
    bw.num_mics = geometry.mics.size();
    std::vector<BeamTarget> targets{MouthTarget{}};
    for (double az : azimuths) targets.emplace_back(az);
    for (const auto& t : targets) {
        bw.directions.push_back(beam_label(t));
        bw.weights.push_back(design_delay_and_sum(geometry, t, params));
    }
    return bw;
}

BeamWeights design_default_beams(const ArrayGeometry& geometry, const StftParams& params) {
    return design_beams(geometry, {kPartnerDirections.begin(), kPartnerDirections.end()}, params);
}

void BeamWeights::validate() const {
    params.validate();
    if (weights.empty()) throw ValidationError("beam weights: no beams");
    if (num_mics == 0) throw ValidationError("beam weights: zero microphones");
    if (directions.size() != weights.size()) throw ValidationError("beam weights: direction/beam count mismatch");
    for (const auto& beam : weights) {
        if (beam.size() != params.bins() * num_mics) {
            throw ValidationError("beam weights: each beam needs fft_size/2+1 bins x mics coefficients");
        }
    }
}

Complex beam_response(const BeamWeights& weights, std::size_t beam, std::size_t bin,
                      const std::vector<Complex>& manifold) {
    Complex r{};
    for (std::size_t m = 0; m < weights.num_mics; ++m) r += weights.at(beam, bin, m) * manifold[m];
    return r;
}

AudioClip apply_beams(const AudioClip& mixture, const BeamWeights& weights) {
    mixture.validate();
    weights.validate();
    if (mixture.num_channels() != weights.num_mics) {
        throw ArgumentError("apply_beams: mixture has " + std::to_string(mixture.num_channels()) +
                            " channels, weights expect " + std::to_string(weights.num_mics));
    }
    require_canonical_rate(mixture, "apply_beams");
    const std::size_t len = mixture.length();
    if (len == 0) return AudioClip::zeros(weights.num_beams(), 0, mixture.sample_rate);

    std::vector<Spectrogram> specs;
    specs.reserve(mixture.num_channels());
    for (const auto& ch : mixture.channels) specs.push_back(stft(ch, weights.params));

    AudioClip out;
    out.sample_rate = mixture.sample_rate;
    const std::size_t bins = weights.params.bins();
    for (std::size_t b = 0; b < weights.num_beams(); ++b) {
        Spectrogram y = specs.front();
        for (std::size_t t = 0; t < y.frames; ++t) {
            for (std::size_t f = 0; f < bins; ++f) {
                Complex acc{};
                for (std::size_t m = 0; m < weights.num_mics; ++m) acc += weights.at(b, f, m) * specs[m].at(t, f);
                y.at(t, f) = acc;
            }
        }
        out.channels.push_back(istft(y));
    }
    return out;
}

AudioClip select_mouth_beam(const AudioClip& beams) {
    if (beams.channels.empty()) throw ArgumentError("select_mouth_beam: no channels");
    return AudioClip::mono(beams.channels.front(), beams.sample_rate);
}

BeamWeights load_beam_weights(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open beam weights '" + path.string() + "'");
    BeamWeights bw;
    try {
        const json j = json::parse(in);
        bw.params.fft_size = j.at("fft_size").get<std::size_t>();
        bw.params.win_length = j.value("win_length", StftParams{}.win_length);
        bw.params.hop = j.value("hop", StftParams{}.hop);
        bw.directions = j.at("directions").get<std::vector<std::string>>();
        for (const auto& beam : j.at("weights")) {
            std::vector<Complex> flat;
            std::size_t mics = 0;
            for (const auto& bin : beam) {
                mics = bin.size();
                for (const auto& c : bin) flat.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
            }
            if (bw.num_mics != 0 && mics != bw.num_mics) throw ValidationError("beam weights: ragged mic count");
            bw.num_mics = mics;
            bw.weights.push_back(std::move(flat));
        }
    } catch (const json::parse_error& e) {
        throw ParseError("beam weights: " + std::string(e.what()));
    } catch (const json::exception& e) {
        throw ValidationError("beam weights: " + std::string(e.what()));
    }
    bw.validate();
    return bw;
}

void save_beam_weights(const BeamWeights& weights, const std::filesystem::path& path) {
    weights.validate();
    json j;
    j["directions"] = weights.directions;
    j["fft_size"] = weights.params.fft_size;
    j["win_length"] = weights.params.win_length;
    j["hop"] = weights.params.hop;
    j["weights"] = json::array();
    for (std::size_t b = 0; b < weights.num_beams(); ++b) {
        json beam = json::array();
        for (std::size_t f = 0; f < weights.params.bins(); ++f) {
            json bin = json::array();
            for (std::size_t m = 0; m < weights.num_mics; ++m) {
                const auto& c = weights.at(b, f, m);
                bin.push_back({c.real(), c.imag()});
            }
            beam.push_back(std::move(bin));
        }
        j["weights"].push_back(std::move(beam));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write beam weights '" + path.string() + "'");
    out << j.dump() << '\n';
}

}  // namespace dirspeech
