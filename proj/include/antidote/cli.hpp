#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace antidote::cli {

/// Header of the row appended by `run`.
inline constexpr const char* kRunCsvHeader =
    "combination,dataset,k,alpha,V_ratio,F_vanilla,F_antidote,silhouette_vanilla,silhouette_antidote,"
    "db_vanilla,db_antidote,ch_vanilla,ch_antidote,status,seed";

inline constexpr const char* kSweepCsvHeader = "lambda,F_vanilla,F_antidote,difference";

enum ExitCode : int { kSuccess = 0, kInternalError = 1, kUserError = 2 };

/// Runs one subcommand. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace antidote::cli
