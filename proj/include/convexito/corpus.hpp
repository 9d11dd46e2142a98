#pragma once

#include "convexito/convex_model.hpp"
#include "convexito/errors.hpp"

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace cvx {

class UnknownFunctionError : public ConfigError {
 public:
  UnknownFunctionError(const std::string& id, std::vector<std::string> known);
  const std::vector<std::string>& known_ids() const noexcept { return known_; }

 private:
  std::vector<std::string> known_;
};

/// Named corpus of convex functions addressable by string id.
///
/// Descriptor files are INI: one section per function id, with
///
///     family  = quadratic | abs_norm | max_affine | power4_1d | sum_of_pieces
///     dim     = <int>                       (abs_norm, sum_of_pieces)
///     A       = 1 0; 0 1                    (quadratic; rows split by ';')
///     b       = 0 0                         (quadratic; default 0)
///     c       = 0                           (quadratic; default 0)
///     slopes  = -1; 1                       (max_affine; one row per piece)
///     offsets = 0 0                         (max_affine)
///     piece1  = kind=abs scale=1 dir=1,0 shift=0 smoothing=0   (sum_of_pieces)
///
/// Vectors accept comma or whitespace separators.
class Registry {
 public:
  /// The built-in corpus used by tests and the CLI.
  static Registry builtin();

  void add(const std::string& id, CorpusSpec spec);
  bool contains(const std::string& id) const { return specs_.count(id) != 0; }
  const CorpusSpec& spec(const std::string& id) const;
  ConvexFunction get(const std::string& id) const;
  std::vector<std::string> ids() const;

  /// Adds (or overrides) every section of an INI descriptor stream.
  void load_ini(std::istream& in);
  void load_ini_file(const std::string& path);

 private:
  std::map<std::string, CorpusSpec> specs_;
};

/// Parses a single descriptor from key/value pairs (the body of one section).
CorpusSpec parse_descriptor(const std::map<std::string, std::string>& kv);

std::vector<double> parse_number_list(const std::string& text);
Mat parse_matrix(const std::string& text);

}  // namespace cvx
