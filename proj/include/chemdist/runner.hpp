#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace chemdist {

/// Experiment names accepted by run().
const std::vector<std::string>& experiment_names();

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitRuntime = 3;

/// Runs one experiment from a flat JSON config. Writes CSVs and `<experiment>.meta.json`
/// to config["out"]; diagnostics go to `err`, the dist result to `out`.
int run(const std::string& experiment, const nlohmann::json& config, std::ostream& out, std::ostream& err);

}  // namespace chemdist
