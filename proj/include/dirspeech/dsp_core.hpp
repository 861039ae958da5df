#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "dirspeech/audio_io.hpp"

namespace dirspeech {

using Complex = std::complex<double>;

/// STFT framing. Defaults give 25 ms windows with a 10 ms hop at 16 kHz, so a
/// 600 ms chunk is exactly 60 hops and chunked framing lines up with offline framing.
struct StftParams {
    std::size_t fft_size = 512;
    std::size_t win_length = 400;
    std::size_t hop = 160;

    std::size_t bins() const { return fft_size / 2 + 1; }
    /// Zeros prepended so that every sample is covered by a full set of frames.
    std::size_t lead_padding() const { return win_length - hop; }
    void validate() const;

    bool operator==(const StftParams&) const = default;
};

/// T x F complex matrix, row-major by frame.
struct Spectrogram {
    std::size_t frames = 0;
    StftParams params;
    std::size_t origin_length = 0;
    std::vector<Complex> data;

    std::size_t bins() const { return params.bins(); }
    Complex& at(std::size_t t, std::size_t f) { return data[t * bins() + f]; }
    const Complex& at(std::size_t t, std::size_t f) const { return data[t * bins() + f]; }
    std::span<Complex> frame(std::size_t t) { return {data.data() + t * bins(), bins()}; }
    std::span<const Complex> frame(std::size_t t) const { return {data.data() + t * bins(), bins()}; }

    bool same_shape(const Spectrogram& other) const {
        return frames == other.frames && params == other.params;
    }
};

/// Square-root periodic Hann of win_length; used for both analysis and synthesis.
std::vector<double> sqrt_hann(std::size_t win_length);

/// ceil((length + win - hop) / hop).
std::size_t frame_count(std::size_t length, const StftParams& params);

/// Frame t covers samples [t*hop - (win - hop), t*hop + hop); samples outside the
/// signal are zero. Bin 0 is DC.
Spectrogram stft(std::span<const double> signal, const StftParams& params = {});

/// Weighted overlap-add with window-sum normalization, truncated to origin_length.
Signal istft(const Spectrogram& spec);

double frame_rms(std::span<const double> signal);

/// Incremental STFT with the same frame grid as stft(). Holds back the
/// win - hop samples that the next frame still needs.
class StreamingStft {
public:
    explicit StreamingStft(const StftParams& params = {});

    /// Appends samples and returns every frame that became complete, one
    /// vector of bins() values per frame.
    std::vector<std::vector<Complex>> push(std::span<const double> samples);
    /// Zero-pads the tail and returns the remaining frames so that the total
    /// equals frame_count(total pushed).
    std::vector<std::vector<Complex>> finish();

    std::size_t pushed() const { return pushed_; }
    std::size_t frames_emitted() const { return frames_emitted_; }
    std::size_t carried() const { return buffer_.size(); }
    const StftParams& params() const { return params_; }

private:
    std::vector<Complex> analyze(std::span<const double> frame) const;

    StftParams params_;
    std::vector<double> window_;
    std::vector<double> buffer_;
    std::size_t pushed_ = 0;
    std::size_t frames_emitted_ = 0;
};

/// Incremental inverse of StreamingStft. Samples are released once no later
/// frame can overlap them, so output lags input by win - hop samples.
class OverlapAdd {
public:
    explicit OverlapAdd(const StftParams& params = {});

    /// Adds the next frame and returns newly finalized output samples.
    Signal add_frame(std::span<const Complex> bins);
    /// Caps the total output at origin_length. Set it before adding the tail
    /// frames of StreamingStft::finish(), which reach past the signal end.
    void set_length(std::size_t origin_length) { origin_limit_ = origin_length; }
    /// Releases the remaining samples up to origin_length in total.
    Signal finish(std::size_t origin_length);

    std::size_t emitted() const { return emitted_; }
    std::size_t pending() const { return accum_.size(); }

private:
    Signal drain(std::size_t ready_until_padded);

    StftParams params_;
    std::vector<double> window_;
    std::vector<double> scratch_;
    // Accumulators start at padded position base_.
    std::vector<double> accum_;
    std::vector<double> weight_;
    std::size_t base_ = 0;
    std::size_t frames_ = 0;
    std::size_t emitted_ = 0;
    std::size_t origin_limit_ = static_cast<std::size_t>(-1);
};

}  // namespace dirspeech
