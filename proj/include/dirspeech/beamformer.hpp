#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "dirspeech/audio_io.hpp"
#include "dirspeech/dsp_core.hpp"
#include "dirspeech/scene_sim.hpp"

namespace dirspeech {

/// Beam target: the wearer's mouth (near field) or a far-field azimuth in degrees.
struct MouthTarget {};
using BeamTarget = std::variant<MouthTarget, double>;

std::string beam_label(const BeamTarget& target);

/// Fixed per-beam, per-bin, per-mic coefficients. Beam 0 is the mouth beam.
struct BeamWeights {
    std::vector<std::string> directions;
    StftParams params;
    std::size_t num_mics = 0;
    // weights[beam][bin * num_mics + mic]
    std::vector<std::vector<Complex>> weights;

    std::size_t num_beams() const { return weights.size(); }
    const Complex& at(std::size_t beam, std::size_t bin, std::size_t mic) const {
        return weights[beam][bin * num_mics + mic];
    }
    void validate() const;
};

/// Array manifold for a far-field plane wave (azimuth) or a spherical wave
/// from the mouth, referenced to the mic centroid. One value per mic.
std::vector<Complex> steering_vector(const ArrayGeometry& geometry, const BeamTarget& target, double freq_hz);

/// Distortionless delay-and-sum weights, F x M row-major: conj(a) / |a|^2.
std::vector<Complex> design_delay_and_sum(const ArrayGeometry& geometry, const BeamTarget& target,
                                          const StftParams& params = {}, int sample_rate = kSampleRate);

/// Mouth beam followed by far-field beams at `azimuths` (defaults to the five partner directions).
BeamWeights design_beams(const ArrayGeometry& geometry, const std::vector<double>& azimuths,
                         const StftParams& params = {});
BeamWeights design_default_beams(const ArrayGeometry& geometry, const StftParams& params = {});

/// Sum over mics of w(f, m) * a_m(f) for a given manifold.
Complex beam_response(const BeamWeights& weights, std::size_t beam, std::size_t bin,
                      const std::vector<Complex>& manifold);

/// Each output channel is istft(sum_m w(f, m) * stft(ch_m)); lengths match the input.
AudioClip apply_beams(const AudioClip& mixture, const BeamWeights& weights);

/// Channel 0 of a beam stack.
AudioClip select_mouth_beam(const AudioClip& beams);

BeamWeights load_beam_weights(const std::filesystem::path& path);
void save_beam_weights(const BeamWeights& weights, const std::filesystem::path& path);

}  // namespace dirspeech
