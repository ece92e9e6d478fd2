#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace nudgesim::cli {

inline constexpr const char* kToolVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Loads the config, runs the experiment, and writes logs.jsonl,
/// metrics.jsonl, decisions.jsonl, result.json and manifest.json into
/// out_dir. Outputs land in a temp directory first and are renamed into
/// place, so a failed run leaves nothing behind. out_dir must not exist.
int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, bool quiet, int workers);

/// Derives a plot-ready CSV from a finished run directory. Kinds:
/// activity_curve, regret_curve, decay_shapes, metrics. Writes to out_path,
/// or <run_dir>/<what>.csv when empty.
int cmd_export(const std::string& run_dir, const std::string& what,
               const std::string& out_path);

/// Prints a config summary and sampled-population statistics.
int cmd_inspect(const std::string& config_path);

}  // namespace nudgesim::cli
