#include "dirspeech/dsp_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dirspeech/error.hpp"
#include "fft.hpp"

namespace dirspeech {

namespace {
constexpr double kWindowSumFloor = 1e-8;
}

void StftParams::validate() const {
    if (fft_size == 0 || win_length == 0 || hop == 0) throw ArgumentError("STFT sizes must be positive");
    if (win_length > fft_size) throw ArgumentError("STFT win_length must not exceed fft_size");
    if (hop > win_length) throw ArgumentError("STFT hop must not exceed win_length");
}

std::vector<double> sqrt_hann(std::size_t win_length) {
    std::vector<double> w(win_length);
    for (std::size_t n = 0; n < win_length; ++n) {
        const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                                 static_cast<double>(win_length));
        w[n] = std::sqrt(hann);
    }
    return w;
}

std::size_t frame_count(std::size_t length, const StftParams& params) {
    const std::size_t span = length + params.lead_padding();
    return (span + params.hop - 1) / params.hop;
}

Spectrogram stft(std::span<const double> signal, const StftParams& params) {
    params.validate();
    if (signal.empty()) throw ArgumentError("stft: empty signal");

    Spectrogram spec;
    spec.params = params;
    spec.origin_length = signal.size();
    spec.frames = frame_count(signal.size(), params);
    spec.data.assign(spec.frames * params.bins(), Complex{});

    const auto window = sqrt_hann(params.win_length);
    auto& fft = detail::real_fft(params.fft_size);
    std::vector<double> frame(params.fft_size, 0.0);
    const auto pad = static_cast<std::ptrdiff_t>(params.lead_padding());
    const auto len = static_cast<std::ptrdiff_t>(signal.size());

    for (std::size_t t = 0; t < spec.frames; ++t) {
        const auto start = static_cast<std::ptrdiff_t>(t * params.hop) - pad;
        for (std::size_t n = 0; n < params.win_length; ++n) {
            const auto i = start + static_cast<std::ptrdiff_t>(n);
            frame[n] = (i >= 0 && i < len) ? signal[static_cast<std::size_t>(i)] * window[n] : 0.0;
        }
        fft.forward(frame, spec.frame(t));
    }
    return spec;
}

Signal istft(const Spectrogram& spec) {
    const auto& params = spec.params;
    params.validate();
    if (spec.data.size() != spec.frames * params.bins()) {
        throw ArgumentError("istft: spectrogram data does not match frames x bins");
    }
    if (spec.frames != frame_count(spec.origin_length, params) && spec.origin_length > 0) {
        throw ArgumentError("istft: frame count inconsistent with origin length");
    }

    const auto window = sqrt_hann(params.win_length);
    auto& fft = detail::real_fft(params.fft_size);
    const std::size_t padded_len = spec.frames == 0 ? 0 : (spec.frames - 1) * params.hop + params.win_length;
    std::vector<double> accum(padded_len, 0.0), weight(padded_len, 0.0);
    std::vector<double> time(params.fft_size);
    const double scale = 1.0 / static_cast<double>(params.fft_size);

    for (std::size_t t = 0; t < spec.frames; ++t) {
        fft.inverse(spec.frame(t), time);
        const std::size_t start = t * params.hop;
        for (std::size_t n = 0; n < params.win_length; ++n) {
            accum[start + n] += window[n] * (time[n] * scale);
            weight[start + n] += window[n] * window[n];
        }
    }

    Signal out(spec.origin_length, 0.0);
    const std::size_t pad = params.lead_padding();
    for (std::size_t i = 0; i < out.size() && i + pad < padded_len; ++i) {
        out[i] = accum[i + pad] / std::max(weight[i + pad], kWindowSumFloor);
    }
    return out;
}

double frame_rms(std::span<const double> signal) {
    if (signal.empty()) return 0.0;
    double acc = 0.0;
    for (double x : signal) acc += x * x;
    return std::sqrt(acc / static_cast<double>(signal.size()));
}

// ---------------------------------------------------------------------------

StreamingStft::StreamingStft(const StftParams& params)
    : params_(params), window_(sqrt_hann(params.win_length)), buffer_(params.lead_padding(), 0.0) {
    params_.validate();
}

std::vector<Complex> StreamingStft::analyze(std::span<const double> frame) const {
    std::vector<double> windowed(params_.fft_size, 0.0);
    for (std::size_t n = 0; n < params_.win_length; ++n) windowed[n] = frame[n] * window_[n];
    std::vector<Complex> bins(params_.bins());
    detail::real_fft(params_.fft_size).forward(windowed, bins);
    return bins;
}

std::vector<std::vector<Complex>> StreamingStft::push(std::span<const double> samples) {
    buffer_.insert(buffer_.end(), samples.begin(), samples.end());
    pushed_ += samples.size();

    std::vector<std::vector<Complex>> frames;
    std::size_t consumed = 0;
    while (buffer_.size() - consumed >= params_.win_length) {
        frames.push_back(analyze(std::span<const double>(buffer_).subspan(consumed, params_.win_length)));
        consumed += params_.hop;
    }
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(consumed));
    frames_emitted_ += frames.size();
    return frames;
}

std::vector<std::vector<Complex>> StreamingStft::finish() {
    std::vector<std::vector<Complex>> frames;
    if (pushed_ == 0) return frames;
    const std::size_t total = frame_count(pushed_, params_);
    std::size_t consumed = 0;
    while (frames_emitted_ + frames.size() < total) {
        if (buffer_.size() < consumed + params_.win_length) buffer_.resize(consumed + params_.win_length, 0.0);
        frames.push_back(analyze(std::span<const double>(buffer_).subspan(consumed, params_.win_length)));
        consumed += params_.hop;
    }
    frames_emitted_ += frames.size();
    buffer_.clear();
    return frames;
}

// ---------------------------------------------------------------------------

OverlapAdd::OverlapAdd(const StftParams& params)
    : params_(params), window_(sqrt_hann(params.win_length)), scratch_(params.fft_size) {
    params_.validate();
}

Signal OverlapAdd::add_frame(std::span<const Complex> bins) {
    if (bins.size() != params_.bins()) throw ArgumentError("OverlapAdd: frame has wrong bin count");
    detail::real_fft(params_.fft_size).inverse(bins, scratch_);
    const double scale = 1.0 / static_cast<double>(params_.fft_size);

    const std::size_t start = frames_ * params_.hop - base_;
    if (accum_.size() < start + params_.win_length) {
        accum_.resize(start + params_.win_length, 0.0);
        weight_.resize(start + params_.win_length, 0.0);
    }
    for (std::size_t n = 0; n < params_.win_length; ++n) {
        accum_[start + n] += window_[n] * (scratch_[n] * scale);
        weight_[start + n] += window_[n] * window_[n];
    }
    ++frames_;
    return drain(frames_ * params_.hop);
}

Signal OverlapAdd::finish(std::size_t origin_length) {
    origin_limit_ = origin_length;
    Signal out = drain(base_ + accum_.size());
    accum_.clear();
    weight_.clear();
    return out;
}

Signal OverlapAdd::drain(std::size_t ready_until_padded) {
    const std::size_t pad = params_.lead_padding();
    const std::size_t count = std::min(ready_until_padded - base_, accum_.size());
    Signal out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t p = base_ + k;
        if (p < pad || emitted_ >= origin_limit_) continue;
        out.push_back(accum_[k] / std::max(weight_[k], kWindowSumFloor));
        ++emitted_;
    }
    accum_.erase(accum_.begin(), accum_.begin() + static_cast<std::ptrdiff_t>(count));
    weight_.erase(weight_.begin(), weight_.begin() + static_cast<std::ptrdiff_t>(count));
    base_ += count;
    return out;
}

}  // namespace dirspeech
