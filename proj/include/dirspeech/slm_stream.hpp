#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dirspeech/attribution.hpp"
#include "dirspeech/audio_io.hpp"
#include "dirspeech/line_socket.hpp"
#include "dirspeech/scene_sim.hpp"
#include "dirspeech/separator.hpp"
#include "dirspeech/text.hpp"

namespace dirspeech {

inline constexpr double kMaxWindowSeconds = 30.0;
inline constexpr std::size_t kMaxHistoryWords = 50;

struct WindowChunk {
    double timestamp_s = 0.0;
    Signal samples;
};

/// Audio context (bounded by duration) plus text context (bounded by word count).
class SlidingWindow {
public:
    explicit SlidingWindow(double max_duration_s = kMaxWindowSeconds, std::size_t max_history_words = kMaxHistoryWords,
                           int sample_rate = kSampleRate);

    /// Appends a chunk and evicts the oldest ones until the window fits.
    /// Returns the number evicted. Timestamps must strictly increase.
    std::size_t push_chunk(Signal chunk, double timestamp_s);
    /// Appends words, keeping only the most recent max_history_words.
    void append_history(const Words& words);

    const std::deque<WindowChunk>& chunks() const { return chunks_; }
    const Words& history() const { return history_; }
    std::string history_text() const { return join_words(history_); }

    std::size_t samples() const { return samples_; }
    double duration_s() const { return static_cast<double>(samples_) / sample_rate_; }
    /// Start of the oldest chunk and end of the newest; both 0 when empty.
    double start_s() const;
    double end_s() const;
    /// Concatenated window audio.
    Signal audio() const;

    std::size_t max_samples() const { return max_samples_; }
    std::size_t max_history_words() const { return max_history_words_; }
    int sample_rate() const { return sample_rate_; }

private:
    std::size_t max_samples_;
    std::size_t max_history_words_;
    int sample_rate_;
    std::deque<WindowChunk> chunks_;
    std::size_t samples_ = 0;
    std::optional<double> last_timestamp_;
    Words history_;
};

enum class SlmTask { Transcribe, Translate };

std::string_view to_string(SlmTask task);
SlmTask parse_slm_task(std::string_view name);

struct SlmRequest {
    std::uint64_t id = 0;
    SlmTask task = SlmTask::Transcribe;
    std::string src;
    std::string tgt;
    std::string prompt;
    std::string history;
    std::shared_ptr<const Signal> audio;
    int sample_rate = kSampleRate;
    double window_start_s = 0.0;
    double window_end_s = 0.0;
};

struct SlmResponse {
    std::uint64_t id = 0;
    std::string text;
    double latency_ms = 0.0;
};

std::string to_request_line(const SlmRequest& request);
SlmRequest parse_request_line(std::string_view line);
std::string to_response_line(const SlmResponse& response);
SlmResponse parse_response_line(std::string_view line);

/// Prompt templates keyed "task.tag" or, more specifically, "task.tag.src-tgt".
/// Templates may use {src} and {tgt}, replaced by language names.
class PromptCatalog {
public:
    static PromptCatalog defaults();
    static PromptCatalog from_json(std::string_view json_text);
    static PromptCatalog load(const std::filesystem::path& path);

    void set(std::string key, std::string tmpl) { templates_[std::move(key)] = std::move(tmpl); }
    bool has(SlmTask task, SpeakerTag tag) const;
    /// Throws ConfigError when no template covers (task, tag).
    std::string render(SlmTask task, SpeakerTag tag, std::string_view src, std::string_view tgt) const;

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

struct LanguagePair {
    std::string wearer = "en";
    std::string partner = "es";

    std::string_view of(Role role) const { return role == Role::Wearer ? wearer : partner; }
};

/// Transcribe in the tagged speaker's language, then translate into the other
/// participant's language. Ids are first_id and first_id + 1. Silence is rejected.
std::array<SlmRequest, 2> build_requests(const SlidingWindow& window, SpeakerTag tag, const PromptCatalog& catalog,
                                         const LanguagePair& langs, std::uint64_t first_id);

class SlmBackend {
public:
    virtual ~SlmBackend() = default;
    /// One response per request, in any order. Throws BackendError.
    virtual std::vector<SlmResponse> complete(std::span<const SlmRequest> requests) = 0;
};

struct MockSlmMode {
    enum class Kind { Oracle, Noisy };
    Kind kind = Kind::Oracle;
    std::uint64_t seed = 0;
    double sub_rate = 0.0;

    static MockSlmMode oracle() { return {}; }
    static MockSlmMode noisy(std::uint64_t seed, double sub_rate) { return {Kind::Noisy, seed, sub_rate}; }
};

/// Stand-in SLM answering from reference segments. It returns the text of
/// segments whose midpoint lies inside the request window and whose language
/// matches the task, skipping segments already present in the history.
class MockSlm final : public SlmBackend {
public:
    MockSlm(std::vector<Segment> segments, MockSlmMode mode = {});

    SlmResponse respond(const SlmRequest& request) const;
    std::vector<SlmResponse> complete(std::span<const SlmRequest> requests) override;

    /// Segment text as this mock renders it, after any noise.
    Words segment_words(std::size_t segment, SlmTask task) const;

private:
    std::vector<Segment> segments_;
    MockSlmMode mode_;
};

/// Client for an external SLM speaking the newline-delimited JSON protocol.
/// All requests of one call are written before any response is read.
class SocketSlmClient final : public SlmBackend {
public:
    explicit SocketSlmClient(const Endpoint& endpoint,
                             std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));
    std::vector<SlmResponse> complete(std::span<const SlmRequest> requests) override;

private:
    LineSocket socket_;
    std::chrono::milliseconds timeout_;
};

struct StreamEvent {
    std::string id;  // scene id; empty for live input
    double t = 0.0;  // start of the chunk that triggered the request
    SpeakerTag tag = SpeakerTag::Wearer;
    SlmTask task = SlmTask::Transcribe;
    std::string text;
};

std::string to_event_line(const StreamEvent& event);
StreamEvent parse_event_line(std::string_view line, std::size_t line_number = 0);
std::vector<StreamEvent> read_event_log(const std::filesystem::path& path);

struct StreamInput {
    std::string id;
    AudioClip mixture;
    // Empty unless oracle references exist.
    AudioClip clean_wearer;
    AudioClip clean_partner;
    LanguagePair langs;
};

/// Builds the stream input of a simulated scene.
StreamInput stream_input_from_scene(std::string id, const Scene& scene, const LanguagePair& langs);

struct StreamConfig {
    TaggerConfig tagger;
    StftParams stft;
    std::size_t min_interval_chunks = 1;
    // When set and the mixture matches it, the SLM hears the mouth beam instead of mic 0.
    std::optional<ArrayGeometry> geometry;
    PromptCatalog prompts = PromptCatalog::defaults();

    void validate() const;
};

struct StreamStats {
    std::size_t chunks = 0;
    std::size_t speech_chunks = 0;
    std::size_t requests = 0;
    std::size_t backend_errors = 0;
    std::size_t evicted_chunks = 0;
    double audio_s = 0.0;
    double wall_s = 0.0;

    double chunks_per_second() const { return wall_s > 0.0 ? static_cast<double>(chunks) / wall_s : 0.0; }
    double real_time_factor() const { return audio_s > 0.0 ? wall_s / audio_s : 0.0; }
};

struct StreamResult {
    std::vector<StreamEvent> events;
    std::vector<TaggedChunk> tags;
    Signal wearer;
    Signal partner;
    StreamStats stats;
};

/// Chunk loop: separate, tag, and for speech chunks push to the window,
/// request transcript and translation, and append the answers to the history.
/// SLM failures are logged per chunk and the stream continues.
StreamResult run_stream(const StreamInput& input, SeparatorBackend& separator, SlmBackend& slm,
                        const StreamConfig& config = {});

}  // namespace dirspeech
