#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cvx::cli {

enum class Format { csv, json };

/// Everything one run needs. Filled from flags, then overridden by the
/// optional INI file given with --config.
struct ExperimentConfig {
  std::string command;
  std::string function_id;
  std::vector<double> x;
  std::vector<double> times;
  std::vector<double> radii;
  std::int64_t n = 1000000;
  std::uint64_t seed = 1;
  std::string output;  ///< CSV path; empty = stdout
  std::string json;    ///< JSON summary path; empty = none (stdout with --format json)
  Format format = Format::csv;
  std::vector<double> direction;
  std::string matrix;  ///< S for trace with --S, Q override for residual-curve
  double eps = 0.05;
  int steps = 1000;
  int levels = 6;
  double r_max = 0.5;
  double width = 1.0;
  double tol = 1e-6;
  int d = 2;
  double epsilon = 0.5;
  std::vector<std::string> corpus_files;
  int threads = 0;

  /// Throws ConfigError on t <= 0, n < 1 and similar.
  void validate() const;
};

/// Entry point used by the executable; returns the process exit code:
/// 0 all verdicts pass, 1 a verdict failed, 2 bad configuration (unknown id,
/// invalid flag), 3 Monte-Carlo abort.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cvx::cli
