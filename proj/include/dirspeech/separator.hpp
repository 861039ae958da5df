#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "dirspeech/dsp_core.hpp"
#include "dirspeech/line_socket.hpp"

namespace dirspeech {

/// 600 ms at 16 kHz, exactly 60 STFT hops with the default parameters.
inline constexpr std::size_t kChunkSamples = 9600;
inline constexpr double kChunkSeconds = 0.6;
inline constexpr double kMaskEpsilon = 1e-8;

/// Wearer and partner time-frequency masks, T x F row-major, entries in [0, 1].
struct MaskPair {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::vector<double> wearer;
    std::vector<double> partner;

    void validate() const;
};

struct Separated {
    Signal wearer;
    Signal partner;
};

/// Ideal ratio masks |W| / (|W| + |P| + eps) from clean references.
MaskPair oracle_irm(const Spectrogram& mixture, const Spectrogram& clean_wearer, const Spectrogram& clean_partner);

/// istft(mask * stft(reference)) for both masks; outputs have the reference's length.
Separated apply_masks(std::span<const double> reference, const MaskPair& masks, const StftParams& params = {});

/// Offline oracle separation of one reference channel.
Separated oracle_separate(std::span<const double> mixture, std::span<const double> clean_wearer,
                          std::span<const double> clean_partner, const StftParams& params = {});

/// Snapshot of a streaming separator.
struct SeparatorState {
    std::size_t chunk_index = 0;   // chunks consumed so far
    std::size_t carried = 0;       // input samples held for the next frame (< win_length)
    std::size_t pending = 0;       // overlap-add samples not yet final
    std::size_t emitted = 0;       // output samples released per stream
    bool finished = false;
};

/// Chunk-wise oracle-mask separation. Concatenated outputs equal
/// oracle_separate() on the whole signal; they trail the input by
/// win_length - hop samples until finish() releases the tail.
class StreamingOracleSeparator {
public:
    explicit StreamingOracleSeparator(const StftParams& params = {});

    /// Chunks hold at most kChunkSamples. A shorter, non-empty chunk is taken
    /// as the last one and flushes the stream. An empty chunk is a no-op.
    Separated process_chunk(std::span<const double> mixture, std::span<const double> clean_wearer,
                            std::span<const double> clean_partner);
    /// Releases the remaining output. Idempotent.
    Separated finish();

    SeparatorState state() const;

private:
    void consume(const std::vector<std::vector<Complex>>& mix, const std::vector<std::vector<Complex>>& wearer,
                 const std::vector<std::vector<Complex>>& partner, Separated& out);

    StftParams params_;
    StreamingStft mix_, wearer_ref_, partner_ref_;
    OverlapAdd wearer_out_, partner_out_;
    std::size_t chunk_index_ = 0;
    bool finished_ = false;
};

/// Client for an external separator speaking newline-delimited JSON:
/// request {"chunk_idx","rate","samples"}, response {"chunk_idx","wearer","partner"}.
/// Several chunks may be in flight; results are returned by chunk index.
class ExternalSeparator {
public:
    explicit ExternalSeparator(const Endpoint& endpoint,
                               std::chrono::milliseconds timeout = std::chrono::milliseconds(200));

    void submit(std::size_t chunk_idx, std::span<const double> samples);
    /// Waits up to the timeout for `chunk_idx`, buffering other chunks that arrive first.
    Separated collect(std::size_t chunk_idx);
    Separated separate(std::size_t chunk_idx, std::span<const double> samples);

private:
    LineSocket socket_;
    std::chrono::milliseconds timeout_;
    std::map<std::size_t, std::size_t> expected_len_;
    std::map<std::size_t, Separated> ready_;
};

/// Separator stage of the streaming pipeline.
class SeparatorBackend {
public:
    virtual ~SeparatorBackend() = default;
    /// `clean_wearer`/`clean_partner` are empty unless oracle references exist.
    virtual Separated process(std::size_t chunk_idx, std::span<const double> mixture,
                              std::span<const double> clean_wearer, std::span<const double> clean_partner) = 0;
    virtual Separated finish() { return {}; }
};

class OracleSeparatorBackend final : public SeparatorBackend {
public:
    explicit OracleSeparatorBackend(const StftParams& params = {}) : separator_(params) {}
    Separated process(std::size_t chunk_idx, std::span<const double> mixture, std::span<const double> clean_wearer,
                      std::span<const double> clean_partner) override;
    Separated finish() override { return separator_.finish(); }

private:
    StreamingOracleSeparator separator_;
};

/// Treats the whole chunk as wearer speech. Used for live audio when no
/// separator is configured.
class PassthroughSeparatorBackend final : public SeparatorBackend {
public:
    Separated process(std::size_t, std::span<const double> mixture, std::span<const double>,
                      std::span<const double>) override {
        return Separated{Signal(mixture.begin(), mixture.end()), Signal(mixture.size(), 0.0)};
    }
};

/// On backend failure the chunk passes through as wearer speech and a warning is logged.
class ExternalSeparatorBackend final : public SeparatorBackend {
public:
    explicit ExternalSeparatorBackend(const Endpoint& endpoint,
                                      std::chrono::milliseconds timeout = std::chrono::milliseconds(200))
        : client_(endpoint, timeout) {}
    Separated process(std::size_t chunk_idx, std::span<const double> mixture, std::span<const double> clean_wearer,
                      std::span<const double> clean_partner) override;

    std::size_t failures() const { return failures_; }

private:
    ExternalSeparator client_;
    std::size_t failures_ = 0;
};

}  // namespace dirspeech
