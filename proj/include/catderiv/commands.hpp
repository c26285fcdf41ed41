#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace catderiv {

struct RunOptions {
    std::optional<std::string> out_dir;    // overrides output.directory
    std::optional<std::uint64_t> seed;     // overrides risk.seed
};

/// Each command returns the process exit code for the usual outcomes and
/// lets numerical exceptions propagate (mapped to 2 by the CLI).
int cmd_validate(const std::string& config_path, const RunOptions& opt, std::ostream& out);
int cmd_price(const std::string& config_path, const RunOptions& opt, std::ostream& log);
int cmd_compare(const std::string& sc_path, const std::string& cc_path, const RunOptions& opt, std::ostream& log);
/// Constant policy when xi is set; otherwise the feedback surface from policy.csv.
int cmd_simulate(const std::string& config_path, const RunOptions& opt, std::optional<double> xi, long dump_paths,
                 std::ostream& log);
int cmd_pl_dist(const std::string& config_path, const RunOptions& opt, std::ostream& log);
int cmd_residual_risk(const std::string& config_path, const RunOptions& opt, std::ostream& log);

}  // namespace catderiv
