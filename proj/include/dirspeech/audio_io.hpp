#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dirspeech {

/// Canonical pipeline rate. 600 ms chunks are exactly 9600 samples.
inline constexpr int kSampleRate = 16000;

using Signal = std::vector<double>;

/// Multichannel waveform. Samples are nominally in [-1, 1].
struct AudioClip {
    std::vector<Signal> channels;
    int sample_rate = kSampleRate;

    static AudioClip mono(Signal samples, int rate = kSampleRate);
    static AudioClip zeros(std::size_t num_channels, std::size_t length, int rate = kSampleRate);

    std::size_t num_channels() const { return channels.size(); }
    std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
    double duration_s() const { return static_cast<double>(length()) / sample_rate; }

    /// Throws ValidationError when channels are ragged, absent, or the rate is not positive.
    void validate() const;
};

/// Rejects clips not at kSampleRate; the pipeline never resamples.
void require_canonical_rate(const AudioClip& clip, std::string_view context);

enum class WavEncoding { Pcm16, Float32 };

AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const AudioClip& clip, const std::filesystem::path& path, WavEncoding encoding);

enum class Role { Wearer, Partner };

std::string_view to_string(Role role);
Role parse_role(std::string_view name);
inline Role other(Role role) { return role == Role::Wearer ? Role::Partner : Role::Wearer; }

/// One attributed reference segment of a scene.
struct Segment {
    Role speaker = Role::Wearer;
    double start = 0.0;
    double end = 0.0;
    std::string text;
    std::string lang;
    std::string translation;
};

struct ManifestEntry {
    std::string id;
    std::string wav;
    // Spatialized clean references. Only scenes written by the simulator carry them.
    std::optional<std::string> clean_wearer;
    std::optional<std::string> clean_partner;
    std::vector<Segment> segments;

    /// Language spoken by each role, taken from its first segment.
    std::map<Role, std::string> languages() const;
    /// Segments of one role in start-time order.
    std::vector<Segment> segments_of(Role role) const;

    void validate() const;
};

ManifestEntry parse_manifest_line(std::string_view line, std::size_t line_number = 0);
std::string to_manifest_line(const ManifestEntry& entry);

/// Reads JSONL, one entry per non-blank line. Errors carry the 1-based line number.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

/// Source material for the simulator: a mono utterance plus its text.
struct ClipEntry {
    std::string id;
    std::string wav;
    std::string text;
    std::string lang;
    std::string translation;
};

std::vector<ClipEntry> read_clip_manifest(const std::filesystem::path& path);
void write_clip_manifest(const std::vector<ClipEntry>& clips, const std::filesystem::path& path);

/// Manifest paths are stored relative to the manifest file when not absolute.
std::filesystem::path resolve_beside(const std::filesystem::path& manifest, std::string_view stored);

}  // namespace dirspeech
