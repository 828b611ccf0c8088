#pragma once

// Command dispatch behind the eshed executable. Every run writes its outputs
// and a manifest.json into the output directory.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace eshed::cli {

enum class Command { analyze, solve_p1, design_p2, design_p4, pareto, baseline, validate };
enum class Format { csv, json };

const char* to_string(Command c);
const char* to_string(Format f);
/// Throws ValidationError on an unknown name.
Command command_from_string(const std::string& s);
Format format_from_string(const std::string& s);
std::vector<std::string> command_names();

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int validation = 2;
inline constexpr int infeasible = 3;
inline constexpr int solver = 4;
} // namespace exit_code

struct CommandSpec {
  Command command = Command::validate;
  std::filesystem::path scenario_path;
  std::filesystem::path output_dir = "eshed-out";
  std::optional<double> epsilon;
  std::optional<double> mesh;
  std::optional<double> zeta;
  std::optional<std::string> x_min; ///< a number, or a JSON file (array or {shed: value})
  std::optional<std::filesystem::path> zeta_grid_path; ///< JSON array or one value per line
  Format format = Format::csv;
  int threads = 1;

  /// Throws ValidationError when the scenario file is missing or an override is out of range.
  void check() const;
};

/// --threads when given, else ESHED_THREADS, else 1. Throws ValidationError on garbage.
int resolve_threads(std::optional<int> flag, const char* env_value);

std::string version();

/// Runs one command. Diagnostics go to `err`, a one-line summary to `out`.
int run(const CommandSpec& spec, std::ostream& out, std::ostream& err);

} // namespace eshed::cli
