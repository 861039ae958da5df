#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dirspeech/audio_io.hpp"

namespace dirspeech {

using Vec3 = std::array<double, 3>;

inline constexpr std::size_t kArrayMics = 5;
inline constexpr double kSpeedOfSound = 343.0;  // m/s

/// Partner azimuths of interest, degrees. 0 is straight ahead, positive to the wearer's right.
inline constexpr std::array<double, 5> kPartnerDirections{-60.0, -30.0, 0.0, 30.0, 60.0};

/// The full 12-direction grid at 30 degree spacing, [-180, 180).
std::vector<double> direction_grid();

/// Coordinates are meters relative to the glasses bridge: x to the wearer's
/// right, y up, z forward.
struct ArrayGeometry {
    std::vector<Vec3> mics;
    Vec3 mouth{0.0, -0.08, 0.02};

    /// Glasses-frame layout used when no geometry file is given.
    static ArrayGeometry glasses_default();

    /// Requires `expected_mics` microphones (0 skips the count check) at
    /// pairwise-distinct positions.
    void validate(std::size_t expected_mics = kArrayMics) const;
};

ArrayGeometry parse_geometry(std::string_view json_text);
ArrayGeometry load_geometry(const std::filesystem::path& path);
std::string geometry_to_json(const ArrayGeometry& geometry);

/// Unit vector for a horizontal-plane azimuth in degrees.
Vec3 direction_vector(double azimuth_deg);
double distance(const Vec3& a, const Vec3& b);

struct RirOptions {
    int sample_rate = kSampleRate;
    double ref_distance = 1.0;       // amplitude is ref_distance / path length
    double reflection_gain = 0.0;    // 0 disables the floor image source
    double floor_depth = 1.6;        // floor plane sits this far below the array, meters
    std::size_t sinc_half_width = 16;
};

using ImpulseResponse = std::vector<double>;

/// Free-field impulse responses from `source` to every microphone: a
/// Hann-windowed sinc fractional delay of path/c seconds with 1/r amplitude,
/// plus an optional floor reflection.
std::vector<ImpulseResponse> synth_rir_at(const ArrayGeometry& geometry, const Vec3& source,
                                          const RirOptions& options = {});

/// Source at `distance` meters along `azimuth_deg` in the horizontal plane of the array.
std::vector<ImpulseResponse> synth_rir(const ArrayGeometry& geometry, double azimuth_deg, double distance_m,
                                       const RirOptions& options = {});

/// Channel i = clip * rirs[i]. Output length is clip length + longest RIR - 1.
AudioClip spatialize(const AudioClip& clip, std::span<const ImpulseResponse> rirs);

/// Mono utterance plus the reference text it carries into the scene.
struct SourceClip {
    AudioClip audio;
    std::string text;
    std::string lang;
    std::string translation;
};

struct SceneSpec {
    SourceClip wearer;
    SourceClip partner;
    double partner_direction = 0.0;
    double partner_distance = 1.5;
    double snr_db = 0.0;                         // wearer-to-partner level on mic 0
    double overlap_s = 0.0;                      // simultaneous speech between the two turns
    std::optional<double> noise_level_db = -40;  // diffuse floor relative to wearer; nullopt = none
    double wearer_rms = 0.05;                    // wearer level on mic 0 over the whole scene
    std::uint64_t seed = 0;
    RirOptions rir;

    void validate() const;
};

struct Scene {
    AudioClip mixture;
    AudioClip clean_wearer;
    AudioClip clean_partner;
    AudioClip noise;
    std::vector<Segment> segments;
};

/// Wearer turn starts at 0; partner turn starts overlap_s before the wearer finishes.
Scene simulate_scene(const SceneSpec& spec, const ArrayGeometry& geometry);

}  // namespace dirspeech
