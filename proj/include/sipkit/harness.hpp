// Experiment orchestration: JSON configs in, summary.json / CSV / JSONL out.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "sipkit/model.hpp"

namespace sipkit {

using Json = nlohmann::json;

/// Thrown for malformed configs; `where` is a JSON pointer into the config.
class ConfigError : public SpecError {
public:
    ConfigError(std::string where, const std::string& what)
        : SpecError(where + ": " + what), where_(std::move(where)) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

enum ExitCode : int { kExitOk = 0, kExitVerdict = 1, kExitValidation = 2 };

/// Experiment kinds accepted in configs and the CLI subcommand for each.
std::string kind_for_subcommand(const std::string& subcommand);

ProcessFamily family_from_json(const Json& j, const std::string& where = "/family");
Observable observable_from_json(const Json& j, const std::string& where = "/observable");
/// Family + observable + centering ("center", default true).
Model model_from_config(const Json& config);

/// 17 significant digits, '.' decimal point, independent of the locale.
std::string format_double(double x);

/// FNV-1a over the canonical (sorted-key, compact) dump.
std::string config_hash(const Json& config);

struct RunOptions {
    std::optional<std::uint64_t> seed;  ///< overrides the config seed
    std::optional<int> workers;         ///< overrides the config hint
    std::filesystem::path out = "out";
    bool write = true;
};

struct RunResult {
    int exit_code = kExitOk;
    Json summary;
    std::string failing_record;  ///< "<file>:<line>" of the first failed verdict
    std::map<std::string, std::string> artifacts;  ///< file name -> content
    std::string error;
};

/// Validates the whole config first (exit 2, nothing written), then runs
/// and writes every artifact at once.
RunResult run_experiment(const Json& config, const RunOptions& options);

/// Re-reads <dir>/summary.json and renders a plain-text digest.
RunResult report_directory(const std::filesystem::path& dir, std::string& text);

}  // namespace sipkit
