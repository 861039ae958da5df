#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirspeech/audio_io.hpp"
#include "dirspeech/dsp_core.hpp"
#include "dirspeech/sot.hpp"
#include "dirspeech/text.hpp"

namespace dirspeech {

inline constexpr double kSiSdrCapDb = 60.0;

struct WerBreakdown {
    std::size_t ins = 0;
    std::size_t del = 0;
    std::size_t sub = 0;
    std::size_t ref_words = 0;
    std::size_t hyp_words = 0;
    // Set when ref_words is 0 but the hypothesis is not empty.
    bool undefined_ref = false;

    std::size_t errors() const { return ins + del + sub; }
    /// 100 * errors / max(1, ref_words).
    double wer_pct() const;
    WerBreakdown& operator+=(const WerBreakdown& other);
};

/// Unit-cost Levenshtein alignment. Among optimal alignments the one with
/// the fewest substitutions, then the fewest insertions, is reported.
WerBreakdown wer(const Words& ref, const Words& hyp);

struct SaReport {
    WerBreakdown wearer;
    WerBreakdown partner;
    // Reference words whose hypothesis landed in the other speaker's stream.
    std::size_t migrated_wearer = 0;
    std::size_t migrated_partner = 0;

    double sa_wearer_pct() const;
    double sa_partner_pct() const;
};

/// Per-speaker WER on the given attribution, plus speaker-attribution error:
/// hypothesis words are re-attributed to minimise the total edit errors of
/// both speakers (ties: fewest moved words, then fewest moved to the wearer),
/// and words moved to speaker s count against s. Runs are in time order;
/// text is normalized first.
SaReport sa_wer(const std::vector<SpeakerRun>& reference, const std::vector<SpeakerRun>& hypothesis);

/// Clipped n-gram statistics of one hypothesis, n = 1..4.
struct BleuStats {
    std::array<std::size_t, 4> matches{};
    std::array<std::size_t, 4> totals{};
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;

    BleuStats& operator+=(const BleuStats& other);
    /// Geometric mean of the precisions times the brevity penalty. Zero
    /// unigram matches or an empty hypothesis score 0; zero higher-order
    /// matches use (m + 1) / (t + 1).
    double score() const;
};

/// Reference length is the one closest to the hypothesis (ties: shorter).
BleuStats bleu_stats(const std::vector<Words>& refs, const Words& hyp);
double bleu(const std::vector<Words>& refs, const Words& hyp);
double corpus_bleu(const std::vector<std::vector<Words>>& refs, const std::vector<Words>& hyps);

/// Scale-invariant SDR in dB, clamped to [-60, 60].
double si_sdr(std::span<const double> ref, std::span<const double> est);

struct LossWeights {
    double l1 = 1.0;
    double stft_l1 = 1.0;
    double neg_si_sdr = 1.0;
};

struct LossTerms {
    double l1 = 0.0;
    double stft_l1 = 0.0;
    double neg_si_sdr = 0.0;
    double combined = 0.0;
};

/// Mean absolute error, mean magnitude-spectrogram error, and -SI-SDR.
LossTerms loss_terms(std::span<const double> ref, std::span<const double> est, const StftParams& params = {},
                     const LossWeights& weights = {});

/// Hypothesis for one scene: speaker-tagged runs in time order.
struct SceneHypothesis {
    std::vector<SpeakerRun> transcript;
    std::vector<SpeakerRun> translation;
    bool has_translation = false;
};

struct ScoreReport {
    struct Speaker {
        WerBreakdown wer;
        std::size_t migrated = 0;
        BleuStats bleu;
        bool has_bleu = false;

        double sa_pct() const;
    };
    Speaker wearer;
    Speaker partner;
    std::size_t scenes = 0;
    std::vector<double> si_sdr_db;

    std::optional<double> bleu() const;
    std::optional<double> mean_si_sdr() const;
    /// {"wearer":{wer,ins,del,sub,sa,bleu},"partner":{...},"bleu":..,"si_sdr":..}
    std::string to_json() const;
};

/// Adds one scene to the report. Reference transcripts and translations are
/// taken from the segments in start-time order.
void add_scene(ScoreReport& report, const std::vector<Segment>& reference, const SceneHypothesis& hypothesis);

}  // namespace dirspeech
