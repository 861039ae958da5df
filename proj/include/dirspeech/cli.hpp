#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dirspeech/attribution.hpp"
#include "dirspeech/dsp_core.hpp"
#include "dirspeech/error.hpp"
#include "dirspeech/line_socket.hpp"
#include "dirspeech/scene_sim.hpp"
#include "dirspeech/slm_stream.hpp"
#include "dirspeech/sot.hpp"

namespace dirspeech {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitIo = 2, kExitBackend = 3 };

int exit_code(ErrorKind kind);

struct SeparatorChoice {
    enum class Kind { Oracle, Passthrough, External };
    Kind kind = Kind::Oracle;
    Endpoint endpoint;
    int timeout_ms = 200;
};

struct SlmChoice {
    enum class Kind { Oracle, Noisy, External };
    Kind kind = Kind::Oracle;
    std::uint64_t seed = 0;
    double sub_rate = 0.0;
    Endpoint endpoint;
    int timeout_ms = 10000;
};

/// "oracle", "passthrough" or host:port.
SeparatorChoice parse_separator_choice(std::string_view text);
/// "oracle", "noisy" or host:port.
SlmChoice parse_slm_choice(std::string_view text);

struct SimulateSettings {
    std::array<double, 2> snr_db{0.0, 15.0};
    std::array<double, 2> overlap_s{0.0, 0.0};
    std::optional<double> noise_db = -40.0;
    double partner_distance = 1.5;
    std::array<std::size_t, 2> words{4, 8};
    std::size_t workers = 4;
};

struct RunConfig {
    std::optional<std::filesystem::path> geometry_path;
    ArrayGeometry geometry = ArrayGeometry::glasses_default();
    StftParams stft;
    TaggerConfig tagger;
    SeparatorChoice separator;
    SlmChoice slm;
    LanguagePair langs;
    std::optional<std::filesystem::path> prompts_path;
    std::size_t min_interval_chunks = 1;
    std::filesystem::path out = "out";
    std::uint64_t seed = 0;
    SimulateSettings simulate;

    /// Missing keys keep their defaults. Relative paths resolve beside the file.
    static RunConfig from_json(std::string_view json_text, const std::filesystem::path& base_dir = {});
    static RunConfig load(const std::filesystem::path& path);

    /// Checks ranges and that referenced files exist, then loads the geometry.
    void finalize();
    StreamConfig stream_config() const;
};

struct SimulateRequest {
    std::optional<std::filesystem::path> clips;  // demo clips are synthesized when absent
    std::size_t count = 1;
};

struct StreamRequest {
    std::optional<std::filesystem::path> manifest;
    std::optional<std::filesystem::path> wav;
};

struct ScoreRequest {
    std::optional<std::filesystem::path> events;
    std::optional<std::filesystem::path> sot;
    std::filesystem::path manifest;
    std::optional<std::filesystem::path> separated;
    std::optional<std::filesystem::path> report;  // stdout when absent
};

struct SotRequest {
    std::filesystem::path manifest;
    SotTask task = SotTask::Transcribe;
};

struct BeamsRequest {
    std::vector<double> azimuths;  // defaults to the five partner directions
};

/// Each command writes under config.out and throws dirspeech::Error on failure.
void cmd_simulate(const RunConfig& config, const SimulateRequest& request);
void cmd_stream(const RunConfig& config, const StreamRequest& request);
void cmd_score(const RunConfig& config, const ScoreRequest& request);
void cmd_sot(const RunConfig& config, const SotRequest& request);
void cmd_beams(const RunConfig& config, const BeamsRequest& request);

/// Parses arguments, runs one subcommand, and maps errors to exit codes.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace dirspeech
