#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dirspeech/audio_io.hpp"

namespace dirspeech {

enum class SpeakerTag { Wearer, Partner, Silence };

std::string_view to_string(SpeakerTag tag);
SpeakerTag parse_tag(std::string_view name);
SpeakerTag to_tag(Role role);

struct TaggerConfig {
    double alpha = 1.0;        // wearer wins when RMS(wearer) / RMS(partner) exceeds this
    double vad_floor = 1e-3;   // RMS below which a stream counts as silent
    double epsilon = 1e-8;     // guards the ratio against a silent partner stream
    std::size_t hangover_chunks = 1;

    void validate() const;
};

struct TaggedChunk {
    std::size_t chunk_idx = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    SpeakerTag tag = SpeakerTag::Silence;
    double rms_wearer = 0.0;
    double rms_partner = 0.0;
};

struct AttributedSpan {
    Role speaker = Role::Wearer;
    double start_s = 0.0;
    double end_s = 0.0;

    bool operator==(const AttributedSpan&) const = default;
};

/// True iff either stream reaches the floor.
bool energy_vad(std::span<const double> wearer_chunk, std::span<const double> partner_chunk,
                const TaggerConfig& cfg);

/// Silence when the VAD rejects the chunk; otherwise Wearer iff
/// RMS(wearer) / (RMS(partner) + eps) > alpha. Ties go to Partner.
SpeakerTag tag_chunk(std::span<const double> wearer_chunk, std::span<const double> partner_chunk,
                     const TaggerConfig& cfg);

/// tag_chunk plus timing and the two RMS values.
TaggedChunk tag_chunk_at(std::size_t chunk_idx, double start_s, std::span<const double> wearer_chunk,
                         std::span<const double> partner_chunk, const TaggerConfig& cfg, int sample_rate = kSampleRate);

/// Merges runs of equal tags into spans. A single-chunk flip with at least
/// hangover_chunks of the other speaker on both sides is absorbed; Silence
/// closes the current span. Chunks must be contiguous and in order.
std::vector<AttributedSpan> smooth_tags(std::span<const TaggedChunk> chunks, const TaggerConfig& cfg);

/// One tag-log JSONL line.
std::string to_tag_log_line(const TaggedChunk& chunk);

}  // namespace dirspeech
