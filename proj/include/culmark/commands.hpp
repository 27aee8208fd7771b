// Command-line front end: subcommands run, fitness, analyze and fit.
#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace culmark {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDataFormat = 3;
inline constexpr int kExitInvariant = 4;

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Process environment lookup.
std::optional<std::string> process_env(const std::string& name);

/// Parses `args` (without the program name) and runs the subcommand.
/// Returns the process exit code; errors are reported on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env = process_env);

} // namespace culmark
