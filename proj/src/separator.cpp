#include "dirspeech/separator.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "dirspeech/error.hpp"

namespace dirspeech {

using nlohmann::json;

void MaskPair::validate() const {
    if (wearer.size() != frames * bins || partner.size() != frames * bins) {
        throw ValidationError("mask pair: sizes do not match frames x bins");
    }
    for (std::size_t i = 0; i < wearer.size(); ++i) {
        if (!(wearer[i] >= 0.0 && wearer[i] <= 1.0) || !(partner[i] >= 0.0 && partner[i] <= 1.0)) {
            throw ValidationError("mask pair: entries must lie in [0, 1]");
        }
    }
}

namespace {

inline std::pair<double, double> irm(const Complex& w, const Complex& p) {
    const double aw = std::abs(w), ap = std::abs(p);
    const double denom = aw + ap + kMaskEpsilon;
    return {aw / denom, ap / denom};
}

}  // namespace

MaskPair oracle_irm(const Spectrogram& mixture, const Spectrogram& clean_wearer, const Spectrogram& clean_partner) {
    if (!mixture.same_shape(clean_wearer) || !mixture.same_shape(clean_partner)) {
        throw ArgumentError("oracle_irm: spectrogram shapes differ");
    }
    MaskPair m;
    m.frames = mixture.frames;
    m.bins = mixture.bins();
    m.wearer.resize(m.frames * m.bins);
    m.partner.resize(m.frames * m.bins);
    for (std::size_t i = 0; i < m.wearer.size(); ++i) {
        std::tie(m.wearer[i], m.partner[i]) = irm(clean_wearer.data[i], clean_partner.data[i]);
    }
    return m;
}

Separated apply_masks(std::span<const double> reference, const MaskPair& masks, const StftParams& params) {
    const Spectrogram ref = stft(reference, params);
    if (masks.frames != ref.frames || masks.bins != ref.bins() || masks.wearer.size() != ref.data.size() ||
        masks.partner.size() != ref.data.size()) {
        throw ArgumentError("apply_masks: mask shape does not match the reference spectrogram");
    }
    Spectrogram w = ref, p = ref;
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
        w.data[i] *= masks.wearer[i];
        p.data[i] *= masks.partner[i];
    }
    return {istft(w), istft(p)};
}

Separated oracle_separate(std::span<const double> mixture, std::span<const double> clean_wearer,
                          std::span<const double> clean_partner, const StftParams& params) {
    if (clean_wearer.size() != mixture.size() || clean_partner.size() != mixture.size()) {
        throw ArgumentError("oracle_separate: reference lengths differ from the mixture");
    }
    const auto masks = oracle_irm(stft(mixture, params), stft(clean_wearer, params), stft(clean_partner, params));
    return apply_masks(mixture, masks, params);
}

// ---------------------------------------------------------------------------

StreamingOracleSeparator::StreamingOracleSeparator(const StftParams& params)
    : params_(params),
      mix_(params),
      wearer_ref_(params),
      partner_ref_(params),
      wearer_out_(params),
      partner_out_(params) {}

void StreamingOracleSeparator::consume(const std::vector<std::vector<Complex>>& mix,
                                       const std::vector<std::vector<Complex>>& wearer,
                                       const std::vector<std::vector<Complex>>& partner, Separated& out) {
    std::vector<Complex> w(params_.bins()), p(params_.bins());
    for (std::size_t t = 0; t < mix.size(); ++t) {
        for (std::size_t f = 0; f < params_.bins(); ++f) {
            const auto [mw, mp] = irm(wearer[t][f], partner[t][f]);
            w[f] = mix[t][f] * mw;
            p[f] = mix[t][f] * mp;
        }
        const auto ow = wearer_out_.add_frame(w);
        const auto op = partner_out_.add_frame(p);
        out.wearer.insert(out.wearer.end(), ow.begin(), ow.end());
        out.partner.insert(out.partner.end(), op.begin(), op.end());
    }
}

Separated StreamingOracleSeparator::process_chunk(std::span<const double> mixture,
                                                  std::span<const double> clean_wearer,
                                                  std::span<const double> clean_partner) {
    if (mixture.size() > kChunkSamples) {
        throw ArgumentError("process_chunk: chunk of " + std::to_string(mixture.size()) +
                            " samples exceeds 600 ms");
    }
    if (clean_wearer.size() != mixture.size() || clean_partner.size() != mixture.size()) {
        throw ArgumentError("process_chunk: oracle references must match the chunk length");
    }
    Separated out;
    if (mixture.empty()) return out;
    if (finished_) throw ArgumentError("process_chunk: stream already finished");

    consume(mix_.push(mixture), wearer_ref_.push(clean_wearer), partner_ref_.push(clean_partner), out);
    ++chunk_index_;

    if (mixture.size() < kChunkSamples) {
        auto tail = finish();
        out.wearer.insert(out.wearer.end(), tail.wearer.begin(), tail.wearer.end());
        out.partner.insert(out.partner.end(), tail.partner.begin(), tail.partner.end());
    }
    return out;
}

Separated StreamingOracleSeparator::finish() {
    Separated out;
    if (finished_) return out;
    finished_ = true;
    const std::size_t total = mix_.pushed();
    wearer_out_.set_length(total);
    partner_out_.set_length(total);
    consume(mix_.finish(), wearer_ref_.finish(), partner_ref_.finish(), out);
    const auto tw = wearer_out_.finish(total);
    const auto tp = partner_out_.finish(total);
    out.wearer.insert(out.wearer.end(), tw.begin(), tw.end());
    out.partner.insert(out.partner.end(), tp.begin(), tp.end());
    return out;
}

SeparatorState StreamingOracleSeparator::state() const {
    return SeparatorState{chunk_index_, mix_.carried(), wearer_out_.pending(), wearer_out_.emitted(), finished_};
}

// ---------------------------------------------------------------------------

ExternalSeparator::ExternalSeparator(const Endpoint& endpoint, std::chrono::milliseconds timeout)
    : socket_(LineSocket::connect(endpoint, timeout)), timeout_(timeout) {}

void ExternalSeparator::submit(std::size_t chunk_idx, std::span<const double> samples) {
    json req{{"chunk_idx", chunk_idx}, {"rate", kSampleRate}, {"samples", std::vector<double>(samples.begin(), samples.end())}};
    socket_.send_line(req.dump());
    expected_len_[chunk_idx] = samples.size();
}

Separated ExternalSeparator::collect(std::size_t chunk_idx) {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (!ready_.contains(chunk_idx)) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) throw BackendError("separator: no response for chunk " + std::to_string(chunk_idx));
        const auto line = socket_.recv_line(left);
        if (!line) throw BackendError("separator: timed out waiting for chunk " + std::to_string(chunk_idx));
        try {
            const json resp = json::parse(*line);
            const auto idx = resp.at("chunk_idx").get<std::size_t>();
            Separated s{resp.at("wearer").get<Signal>(), resp.at("partner").get<Signal>()};
            const auto it = expected_len_.find(idx);
            if (it == expected_len_.end()) throw BackendError("separator: unsolicited chunk " + std::to_string(idx));
            if (s.wearer.size() != it->second || s.partner.size() != it->second) {
                throw BackendError("separator: chunk " + std::to_string(idx) + " has the wrong length");
            }
            expected_len_.erase(it);
            ready_.emplace(idx, std::move(s));
        } catch (const json::exception& e) {
            throw BackendError(std::string("separator: protocol violation: ") + e.what());
        }
    }
    auto node = ready_.extract(chunk_idx);
    return std::move(node.mapped());
}

Separated ExternalSeparator::separate(std::size_t chunk_idx, std::span<const double> samples) {
    submit(chunk_idx, samples);
    return collect(chunk_idx);
}

// ---------------------------------------------------------------------------

Separated OracleSeparatorBackend::process(std::size_t, std::span<const double> mixture,
                                          std::span<const double> clean_wearer,
                                          std::span<const double> clean_partner) {
    if (clean_wearer.empty() && !mixture.empty()) {
        throw ConfigError("oracle separator needs clean references; use an external separator for live audio");
    }
    return separator_.process_chunk(mixture, clean_wearer, clean_partner);
}

Separated ExternalSeparatorBackend::process(std::size_t chunk_idx, std::span<const double> mixture,
                                            std::span<const double>, std::span<const double>) {
    try {
        return client_.separate(chunk_idx, mixture);
    } catch (const BackendError& e) {
        ++failures_;
        spdlog::warn("chunk {}: {}; passing audio through as wearer", chunk_idx, e.what());
        return Separated{Signal(mixture.begin(), mixture.end()), Signal(mixture.size(), 0.0)};
    }
}

}  // namespace dirspeech
