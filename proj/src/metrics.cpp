#include "dirspeech/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include <json.hpp>

#include "dirspeech/error.hpp"

namespace dirspeech {

double WerBreakdown::wer_pct() const {
    return 100.0 * static_cast<double>(errors()) / static_cast<double>(std::max<std::size_t>(1, ref_words));
}

WerBreakdown& WerBreakdown::operator+=(const WerBreakdown& o) {
    ins += o.ins;
    del += o.del;
    sub += o.sub;
    ref_words += o.ref_words;
    hyp_words += o.hyp_words;
    undefined_ref = ref_words == 0 && hyp_words > 0;
    return *this;
}

WerBreakdown wer(const Words& ref, const Words& hyp) {
    // (total, sub, ins), compared lexicographically.
    using Cost = std::tuple<std::size_t, std::size_t, std::size_t>;
    const std::size_t n = ref.size();
    const std::size_t m = hyp.size();
    std::vector<Cost> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, 0, j};
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = {i, 0, 0};
        for (std::size_t j = 1; j <= m; ++j) {
            const auto& [dt, ds, di] = prev[j - 1];
            Cost best = ref[i - 1] == hyp[j - 1] ? Cost{dt, ds, di} : Cost{dt + 1, ds + 1, di};
            const auto& [ut, us, ui] = prev[j];
            best = std::min(best, Cost{ut + 1, us, ui});  // deletion
            const auto& [lt, ls, li] = cur[j - 1];
            best = std::min(best, Cost{lt + 1, ls, li + 1});  // insertion
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    const auto [total, sub, ins] = prev[m];
    WerBreakdown w;
    w.sub = sub;
    w.ins = ins;
    w.del = total - sub - ins;
    w.ref_words = n;
    w.hyp_words = m;
    w.undefined_ref = n == 0 && m > 0;
    return w;
}

namespace {

double pct(std::size_t count, std::size_t total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

struct TaggedWord {
    std::string word;
    Role speaker;
};

}  // namespace

double SaReport::sa_wearer_pct() const { return pct(migrated_wearer, wearer.ref_words); }
double SaReport::sa_partner_pct() const { return pct(migrated_partner, partner.ref_words); }

SaReport sa_wer(const std::vector<SpeakerRun>& reference, const std::vector<SpeakerRun>& hypothesis) {
    Words ref_w, ref_p, hyp_w, hyp_p;
    for (const auto& r : reference) {
        auto words = normalized_words(r.text);
        auto& dst = r.speaker == Role::Wearer ? ref_w : ref_p;
        dst.insert(dst.end(), words.begin(), words.end());
    }
    std::vector<TaggedWord> hyp;
    for (const auto& r : hypothesis) {
        for (auto& w : normalized_words(r.text)) {
            (r.speaker == Role::Wearer ? hyp_w : hyp_p).push_back(w);
            hyp.push_back(TaggedWord{std::move(w), r.speaker});
        }
    }

    SaReport report;
    report.wearer = wer(ref_w, hyp_w);
    report.partner = wer(ref_p, hyp_p);

    // Layered DP over hypothesis words; state (i, j) = reference words of
    // wearer / partner consumed. Cost = (errors, moved, moved to wearer).
    using Cost = std::tuple<std::size_t, std::size_t, std::size_t>;
    constexpr std::size_t kInf = static_cast<std::size_t>(-1) / 4;
    const std::size_t nw = ref_w.size() + 1;
    const std::size_t np = ref_p.size() + 1;
    auto idx = [np](std::size_t i, std::size_t j) { return i * np + j; };
    const Cost inf{kInf, 0, 0};

    auto relax_deletions = [&](std::vector<Cost>& layer) {
        for (std::size_t i = 0; i < nw; ++i) {
            for (std::size_t j = 0; j < np; ++j) {
                auto& c = layer[idx(i, j)];
                if (i > 0) {
                    const auto& [e, f, fw] = layer[idx(i - 1, j)];
                    c = std::min(c, Cost{e + 1, f, fw});
                }
                if (j > 0) {
                    const auto& [e, f, fw] = layer[idx(i, j - 1)];
                    c = std::min(c, Cost{e + 1, f, fw});
                }
            }
        }
    };

    std::vector<Cost> layer(nw * np, inf), next(nw * np, inf);
    layer[0] = {0, 0, 0};
    relax_deletions(layer);
    for (const auto& h : hyp) {
        std::fill(next.begin(), next.end(), inf);
        for (std::size_t i = 0; i < nw; ++i) {
            for (std::size_t j = 0; j < np; ++j) {
                const auto [e, f, fw] = layer[idx(i, j)];
                if (e >= kInf) continue;
                for (Role target : {Role::Wearer, Role::Partner}) {
                    const std::size_t moved = f + (target != h.speaker ? 1 : 0);
                    const std::size_t moved_w = fw + (target != h.speaker && target == Role::Wearer ? 1 : 0);
                    // Insertion in the target stream.
                    next[idx(i, j)] = std::min(next[idx(i, j)], Cost{e + 1, moved, moved_w});
                    if (target == Role::Wearer && i + 1 < nw) {
                        auto& c = next[idx(i + 1, j)];
                        c = std::min(c, Cost{e + (ref_w[i] == h.word ? 0 : 1), moved, moved_w});
                    }
                    if (target == Role::Partner && j + 1 < np) {
                        auto& c = next[idx(i, j + 1)];
                        c = std::min(c, Cost{e + (ref_p[j] == h.word ? 0 : 1), moved, moved_w});
                    }
                }
            }
        }
        relax_deletions(next);
        std::swap(layer, next);
    }
    const auto [errors, moved, moved_w] = layer[idx(nw - 1, np - 1)];
    report.migrated_wearer = moved_w;
    report.migrated_partner = moved - moved_w;
    return report;
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
    for (std::size_t n = 0; n < 4; ++n) {
        matches[n] += o.matches[n];
        totals[n] += o.totals[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
}

double BleuStats::score() const {
    if (hyp_len == 0 || matches[0] == 0) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
        double p;
        if (n > 0 && matches[n] == 0) {
            p = 1.0 / static_cast<double>(totals[n] + 1);
        } else {
            p = static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
        }
        log_sum += std::log(p);
    }
    const double c = static_cast<double>(hyp_len);
    const double r = static_cast<double>(ref_len);
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return bp * std::exp(log_sum / 4.0);
}

namespace {

using NgramCounts = std::map<Words, std::size_t>;

NgramCounts ngrams(const Words& words, std::size_t n) {
    NgramCounts out;
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
        ++out[Words(words.begin() + static_cast<std::ptrdiff_t>(i), words.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return out;
}

}  // namespace

BleuStats bleu_stats(const std::vector<Words>& refs, const Words& hyp) {
    if (refs.empty()) throw ArgumentError("bleu: at least one reference is required");
    BleuStats s;
    s.hyp_len = hyp.size();
    s.ref_len = refs.front().size();
    for (const auto& r : refs) {
        const auto d = [&](std::size_t len) {
            return len > hyp.size() ? len - hyp.size() : hyp.size() - len;
        };
        if (d(r.size()) < d(s.ref_len) || (d(r.size()) == d(s.ref_len) && r.size() < s.ref_len)) s.ref_len = r.size();
    }
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto hyp_counts = ngrams(hyp, n);
        std::map<Words, std::size_t> max_ref;
        for (const auto& r : refs) {
            for (const auto& [g, c] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
        }
        for (const auto& [g, c] : hyp_counts) {
            s.totals[n - 1] += c;
            const auto it = max_ref.find(g);
            if (it != max_ref.end()) s.matches[n - 1] += std::min(c, it->second);
        }
    }
    return s;
}

double bleu(const std::vector<Words>& refs, const Words& hyp) { return bleu_stats(refs, hyp).score(); }

double corpus_bleu(const std::vector<std::vector<Words>>& refs, const std::vector<Words>& hyps) {
    if (refs.size() != hyps.size()) throw ArgumentError("corpus_bleu: reference and hypothesis counts differ");
    BleuStats total;
    for (std::size_t i = 0; i < hyps.size(); ++i) total += bleu_stats(refs[i], hyps[i]);
    return total.score();
}

double si_sdr(std::span<const double> ref, std::span<const double> est) {
    if (ref.size() != est.size()) throw ArgumentError("si_sdr: lengths differ");
    double rr = 0.0, er = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        rr += ref[i] * ref[i];
        er += est[i] * ref[i];
    }
    if (!(rr > 0.0)) throw ArgumentError("si_sdr: reference is all zeros");
    const double alpha = er / rr;
    double target = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double s = alpha * ref[i];
        const double e = est[i] - s;
        target += s * s;
        noise += e * e;
    }
    if (target <= 0.0) return -kSiSdrCapDb;
    if (noise <= 0.0) return kSiSdrCapDb;
    return std::clamp(10.0 * std::log10(target / noise), -kSiSdrCapDb, kSiSdrCapDb);
}

LossTerms loss_terms(std::span<const double> ref, std::span<const double> est, const StftParams& params,
                     const LossWeights& weights) {
    if (ref.size() != est.size()) throw ArgumentError("loss_terms: lengths differ");
    LossTerms t;
    t.neg_si_sdr = -si_sdr(ref, est);
    double l1 = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) l1 += std::abs(est[i] - ref[i]);
    t.l1 = l1 / static_cast<double>(ref.size());

    const auto r = stft(ref, params);
    const auto e = stft(est, params);
    double s = 0.0;
    for (std::size_t i = 0; i < r.data.size(); ++i) s += std::abs(std::abs(e.data[i]) - std::abs(r.data[i]));
    t.stft_l1 = s / static_cast<double>(r.data.size());

    t.combined = weights.l1 * t.l1 + weights.stft_l1 * t.stft_l1 + weights.neg_si_sdr * t.neg_si_sdr;
    return t;
}

double ScoreReport::Speaker::sa_pct() const { return pct(migrated, wer.ref_words); }

std::optional<double> ScoreReport::bleu() const {
    if (!wearer.has_bleu && !partner.has_bleu) return std::nullopt;
    BleuStats all = wearer.bleu;
    all += partner.bleu;
    return all.score();
}

std::optional<double> ScoreReport::mean_si_sdr() const {
    if (si_sdr_db.empty()) return std::nullopt;
    double s = 0.0;
    for (double v : si_sdr_db) s += v;
    return s / static_cast<double>(si_sdr_db.size());
}

std::string ScoreReport::to_json() const {
    auto speaker = [](const Speaker& s) {
        nlohmann::json j{{"wer", s.wer.wer_pct()},
                         {"ins", s.wer.ins},
                         {"del", s.wer.del},
                         {"sub", s.wer.sub},
                         {"ref_words", s.wer.ref_words},
                         {"sa", s.sa_pct()}};
        j["bleu"] = s.has_bleu ? nlohmann::json(s.bleu.score()) : nlohmann::json(nullptr);
        return j;
    };
    nlohmann::json j{{"wearer", speaker(wearer)}, {"partner", speaker(partner)}, {"scenes", scenes}};
    const auto b = bleu();
    j["bleu"] = b ? nlohmann::json(*b) : nlohmann::json(nullptr);
    const auto s = mean_si_sdr();
    j["si_sdr"] = s ? nlohmann::json(*s) : nlohmann::json(nullptr);
    return j.dump(2);
}

void add_scene(ScoreReport& report, const std::vector<Segment>& reference, const SceneHypothesis& hypothesis) {
    std::vector<Segment> segs = reference;
    std::stable_sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.start < b.start; });

    std::vector<SpeakerRun> ref_runs;
    for (const auto& s : segs) ref_runs.push_back(SpeakerRun{s.speaker, s.text});
    const auto sa = sa_wer(ref_runs, hypothesis.transcript);
    report.wearer.wer += sa.wearer;
    report.partner.wer += sa.partner;
    report.wearer.migrated += sa.migrated_wearer;
    report.partner.migrated += sa.migrated_partner;
    ++report.scenes;

    if (!hypothesis.has_translation) return;
    for (Role role : {Role::Wearer, Role::Partner}) {
        Words ref, hyp;
        for (const auto& s : segs) {
            if (s.speaker != role) continue;
            const auto w = normalized_words(s.translation);
            ref.insert(ref.end(), w.begin(), w.end());
        }
        for (const auto& r : hypothesis.translation) {
            if (r.speaker != role) continue;
            const auto w = normalized_words(r.text);
            hyp.insert(hyp.end(), w.begin(), w.end());
        }
        if (ref.empty() && hyp.empty()) continue;
        auto& spk = role == Role::Wearer ? report.wearer : report.partner;
        spk.bleu += bleu_stats({ref}, hyp);
        spk.has_bleu = true;
    }
}

}  // namespace dirspeech
