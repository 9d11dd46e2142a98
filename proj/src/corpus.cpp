#include "convexito/corpus.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace cvx {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError("descriptor is missing key '" + key + "'");
  return it->second;
}

double to_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  const double v = to_double(boost::trim_copy(s));
  if (v != std::floor(v)) throw ConfigError("not an integer: '" + s + "'");
  return static_cast<int>(v);
}

PieceKind parse_kind(const std::string& s) {
  if (s == "abs") return PieceKind::abs;
  if (s == "relu") return PieceKind::relu;
  if (s == "square") return PieceKind::square;
  if (s == "power4") return PieceKind::power4;
  throw ConfigError("unknown piece kind '" + s + "' (abs|relu|square|power4)");
}

Piece parse_piece(const std::string& text, int dim) {
  Piece p;
  p.direction = Vec::Zero(dim);
  std::vector<std::string> fields;
  boost::split(fields, boost::trim_copy(text), boost::is_space(), boost::token_compress_on);
  bool have_kind = false, have_dir = false;
  for (const std::string& field : fields) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ConfigError("piece field '" + field + "' is not key=value");
    const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
    if (key == "kind") {
      p.kind = parse_kind(val);
      have_kind = true;
    } else if (key == "scale") {
      p.scale = to_double(val);
    } else if (key == "dir") {
      const auto v = parse_number_list(val);
      if (static_cast<int>(v.size()) != dim) throw ConfigError("piece dir has wrong dimension");
      p.direction = from_values(v);
      have_dir = true;
    } else if (key == "shift") {
      p.shift = to_double(val);
    } else if (key == "smoothing") {
      p.smoothing = to_double(val);
    } else {
      throw ConfigError("unknown piece field '" + key + "'");
    }
  }
  if (!have_kind || !have_dir) throw ConfigError("piece needs kind= and dir=");
  return p;
}

Piece piece(PieceKind kind, double scale, std::initializer_list<double> dir, double shift = 0.0) {
  Piece p;
  p.kind = kind;
  p.scale = scale;
  p.direction = from_values(dir);
  p.shift = shift;
  return p;
}

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

UnknownFunctionError::UnknownFunctionError(const std::string& id, std::vector<std::string> known)
    : ConfigError("unknown function id '" + id + "'; known ids: " + join(known)), known_(std::move(known)) {}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<std::string> parts;
  const std::string trimmed = boost::trim_copy(text);
  if (trimmed.empty()) return {};
  boost::split(parts, trimmed, boost::is_any_of(", \t"), boost::token_compress_on);
  std::vector<double> out;
  for (const auto& p : parts)
    if (!p.empty()) out.push_back(to_double(p));
  return out;
}

Mat parse_matrix(const std::string& text) {
  std::vector<std::string> rows;
  boost::split(rows, text, boost::is_any_of(";"));
  std::vector<std::vector<double>> vals;
  for (const auto& r : rows) {
    auto v = parse_number_list(r);
    if (!v.empty()) vals.push_back(std::move(v));
  }
  if (vals.empty()) throw ConfigError("empty matrix");
  const auto cols = vals.front().size();
  if (vals.size() > static_cast<std::size_t>(kMaxDim) || cols > static_cast<std::size_t>(kMaxDim))
    throw ConfigError("matrix larger than 8x8");
  Mat m(static_cast<Eigen::Index>(vals.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i].size() != cols) throw ConfigError("ragged matrix rows");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = vals[i][j];
  }
  return m;
}

CorpusSpec parse_descriptor(const std::map<std::string, std::string>& kv) {
  const std::string family = boost::trim_copy(need(kv, "family"));
  if (family == "quadratic") {
    QuadraticSpec q;
    q.A = parse_matrix(need(kv, "A"));
    const int d = static_cast<int>(q.A.rows());
    q.b = kv.count("b") ? from_values(parse_number_list(kv.at("b"))) : Vec::Zero(d);
    q.c = kv.count("c") ? to_double(boost::trim_copy(kv.at("c"))) : 0.0;
    return q;
  }
  if (family == "abs_norm") return AbsNormSpec{kv.count("dim") ? to_int(kv.at("dim")) : 1};
  if (family == "power4_1d") return Power4Spec{};
  if (family == "max_affine") {
    MaxAffineSpec m;
    const Mat s = parse_matrix(need(kv, "slopes"));
    for (int i = 0; i < s.rows(); ++i) m.slopes.push_back(s.row(i).transpose());
    m.offsets = parse_number_list(need(kv, "offsets"));
    return m;
  }
  if (family == "sum_of_pieces") {
    SumOfPiecesSpec s;
    s.dim = to_int(need(kv, "dim"));
    if (s.dim < 1 || s.dim > kMaxDim) throw ConfigError("sum_of_pieces: dim out of range");
    for (const auto& [key, val] : kv)
      if (key.rfind("piece", 0) == 0) s.pieces.push_back(parse_piece(val, s.dim));
    return s;
  }
  throw ConfigError("unknown family '" + family + "'");
}

void Registry::add(const std::string& id, CorpusSpec spec) {
  make_corpus_function(spec, id);  // validates
  specs_[id] = std::move(spec);
}

const CorpusSpec& Registry::spec(const std::string& id) const {
  auto it = specs_.find(id);
  if (it == specs_.end()) throw UnknownFunctionError(id, ids());
  return it->second;
}

ConvexFunction Registry::get(const std::string& id) const { return make_corpus_function(spec(id), id); }

std::vector<std::string> Registry::ids() const {
  std::vector<std::string> out;
  for (const auto& kv : specs_) out.push_back(kv.first);
  return out;
}

void Registry::load_ini(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("corpus file: ") + e.what());
  }
  for (const auto& [id, section] : tree) {
    std::map<std::string, std::string> kv;
    for (const auto& [key, node] : section) kv[key] = node.get_value<std::string>();
    try {
      add(id, parse_descriptor(kv));
    } catch (const ConfigError& e) {
      throw ConfigError("corpus entry '" + id + "': " + e.what());
    }
  }
}

void Registry::load_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file '" + path + "'");
  load_ini(in);
}

Registry Registry::builtin() {
  Registry r;
  for (int d = 1; d <= 3; ++d)
    r.add("quadratic_identity_d" + std::to_string(d), QuadraticSpec{identity(d), Vec::Zero(d), 0.0});
  r.add("quadratic_aniso_d2", QuadraticSpec{mat2(2, 1, 1, 2), from_values({0.5, -1.0}), 0.25});
  {
    Mat A(3, 3);
    A << 3, 1, 0, 1, 2, 0.5, 0, 0.5, 1;
    r.add("quadratic_d3", QuadraticSpec{A, from_values({0.1, 0.2, -0.3}), -1.0});
  }
  r.add("affine_d2", QuadraticSpec{Mat::Zero(2, 2), from_values({1.0, -2.0}), 0.5});
  r.add("abs_1d", AbsNormSpec{1});
  r.add("norm_d2", AbsNormSpec{2});
  r.add("power4_1d", Power4Spec{});
  r.add("relu_1d", SumOfPiecesSpec{1, {piece(PieceKind::relu, 1.0, {1.0})}});
  r.add("max_affine_abs_1d", MaxAffineSpec{{from_values({-1.0}), from_values({1.0})}, {0.0, 0.0}});
  r.add("max_affine_d2", MaxAffineSpec{{from_values({1.0, 0.0}), from_values({-1.0, 0.5}), from_values({0.0, -1.0}),
                                        from_values({0.5, 1.0})},
                                       {0.0, 0.2, -0.1, 0.3}});
  r.add("abs_x1_half_x2sq_d2", SumOfPiecesSpec{2, {piece(PieceKind::abs, 1.0, {1.0, 0.0}),
                                                   piece(PieceKind::square, 1.0, {0.0, 1.0})}});
  r.add("quartic_ridge_d2", SumOfPiecesSpec{2, {piece(PieceKind::square, 1.0, {1.0, 0.0}),
                                                piece(PieceKind::square, 1.0, {0.0, 1.0}),
                                                piece(PieceKind::power4, 1.0 / 12.0, {1.0, 0.0})}});
  const double s = 1.0 / std::sqrt(2.0);
  r.add("smooth_ridge_d2", SumOfPiecesSpec{2, {piece(PieceKind::square, 2.0, {s, s}),
                                               piece(PieceKind::power4, 0.1, {s, -s}, 0.3),
                                               piece(PieceKind::square, 0.5, {0.0, 1.0})}});
  return r;
}

}  // namespace cvx
