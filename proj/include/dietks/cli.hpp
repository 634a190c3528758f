#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dietks::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kDomainFailure = 1;
inline constexpr int kEnvironmentFailure = 2;

/// Directory holding default.kb and assessment.rules. DIETKS_DATA_DIR in the
/// environment overrides the compiled-in location.
std::filesystem::path data_dir();

/// Entry point for `dietks validate|assess|plan|serve`. Machine-readable
/// documents go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dietks::cli
