#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dirspeech/audio_io.hpp"
#include "dirspeech/text.hpp"

namespace dirspeech {

// Literal markers of the serialized-output text format.
inline constexpr std::string_view kWearerToken = "<wearer>";
inline constexpr std::string_view kPartnerToken = "<partner>";
inline constexpr std::string_view kChangeToken = "<sc>";

struct AttributedSegment {
    Role speaker = Role::Wearer;
    double start_s = 0.0;
    Words text;
    std::string lang;
};

struct SotToken {
    enum class Kind { Role, Change, Word };
    Kind kind = Kind::Word;
    Role role = Role::Wearer;  // Kind::Role only
    std::string word;          // Kind::Word only

    static SotToken role_marker(Role r) { return {Kind::Role, r, {}}; }
    static SotToken change() { return {Kind::Change, Role::Wearer, {}}; }
    static SotToken text(std::string w) { return {Kind::Word, Role::Wearer, std::move(w)}; }

    bool operator==(const SotToken&) const = default;
};

struct SotSequence {
    std::vector<SotToken> tokens;

    /// Whitespace-joined tokens with the literal markers.
    std::string str() const;
    static SotSequence from_string(std::string_view text);

    /// Starts with a role marker, every <sc> is followed by a role marker, no adjacent <sc>.
    bool well_formed() const;
    std::size_t change_count() const;
};

/// Sorts by start time (ties: wearer first) and emits <role> words, with
/// <sc> <role> at each speaker change. Same-speaker neighbours merge.
SotSequence serialize_sot(std::vector<AttributedSegment> segments);

struct SpeakerRun {
    Role speaker = Role::Wearer;
    std::string text;

    bool operator==(const SpeakerRun&) const = default;
};

enum class SotParseMode { Lenient, Strict };

struct SotParseResult {
    std::vector<SpeakerRun> runs;
    std::vector<std::string> warnings;
};

/// One run per maximal same-speaker stretch. Lenient mode repairs a missing
/// role marker after <sc> by assuming the speakers alternate (and records a
/// warning); strict mode throws ParseError instead.
SotParseResult parse_sot(const SotSequence& sequence, SotParseMode mode = SotParseMode::Lenient);
SotParseResult parse_sot(std::string_view text, SotParseMode mode = SotParseMode::Lenient);

enum class SotTask { Transcribe, Translate, Both };

std::string_view to_string(SotTask task);
SotTask parse_sot_task(std::string_view name);

struct TrainingExample {
    std::string prompt;
    std::string target;
};

/// Prompt naming the task and languages, and the serialized target built
/// from transcripts, translations, or transcript-then-translation per segment.
TrainingExample build_training_example(const ManifestEntry& entry, SotTask task);

/// English display name for a language code, or the code itself.
std::string language_name(std::string_view code);

}  // namespace dirspeech
