#pragma once

#include "convexito/linalg.hpp"
#include "convexito/quadrature.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cvx {

// ---------------------------------------------------------------------------
// Second-derivative measures

struct Atom {
  Vec location;
  Mat weight;
};

/// Matrix-valued measure mu = Q(y) dy + sum_k W_k delta_{y_k}.
struct SecondDerivativeMeasure {
  int dim = 1;
  std::function<Mat(const Vec&)> density;
  std::vector<Atom> atoms;

  /// Throws ConfigError if an atom weight is not symmetric PSD (1e-10) or two
  /// atoms share a location.
  void validate() const;
};

struct ScalarAtom {
  Vec location;
  double weight = 0.0;
};

/// Non-negative scalar measure: density plus point masses.
struct ScalarMeasure {
  int dim = 1;
  std::function<double(const Vec&)> density;
  std::vector<ScalarAtom> atoms;
};

/// tr(mu).
ScalarMeasure trace_view(const SecondDerivativeMeasure& mu);

/// Revuz measure of the compensator: half the trace of mu.
ScalarMeasure revuz_view(const SecondDerivativeMeasure& mu);

// ---------------------------------------------------------------------------
// Corpus descriptors

/// f(x) = 1/2 <Ax, x> + <b, x> + c with A symmetric PSD.
struct QuadraticSpec {
  Mat A;
  Vec b;
  double c = 0.0;
};

/// f(x) = ||x|| (Euclidean); |x| in one dimension.
struct AbsNormSpec {
  int dim = 1;
};

/// f(x) = max_k <a_k, x> + b_k.
struct MaxAffineSpec {
  std::vector<Vec> slopes;
  std::vector<double> offsets;
};

/// f(x) = x^4 on the real line.
struct Power4Spec {};

enum class PieceKind { abs, relu, square, power4 };

/// One ridge term scale * phi(<direction, x> - shift), with phi one of
/// |u|, max(0, u), u^2 / 2, u^4. A positive `smoothing` sigma replaces phi by
/// its Gaussian smoothing E[phi(u + sigma Z)] (closed forms).
struct Piece {
  PieceKind kind = PieceKind::square;
  double scale = 1.0;
  Vec direction;
  double shift = 0.0;
  double smoothing = 0.0;
};

/// Sum of ridge pieces; each piece is convex, so the sum is.
struct SumOfPiecesSpec {
  int dim = 1;
  std::vector<Piece> pieces;
};

using CorpusSpec = std::variant<QuadraticSpec, AbsNormSpec, MaxAffineSpec, Power4Spec, SumOfPiecesSpec>;

int spec_dim(const CorpusSpec& spec);
std::string family_name(const CorpusSpec& spec);

// ---------------------------------------------------------------------------
// Convex function oracle

/// Linear growth bound |f(x)| <= A ||x|| + B. Families with super-linear growth
/// report the bound valid on the working ball ||x|| <= kGrowthRadius.
struct Growth {
  double A = 0.0;
  double B = 0.0;
};

inline constexpr double kGrowthRadius = 1e3;

struct ConvexFunction {
  std::string id;
  int dim = 1;
  std::function<double(const Vec&)> eval;
  /// Least-norm element of the subdifferential.
  std::function<Vec(const Vec&)> subgradient;
  /// Alexandrov Hessian Q(x); empty when no analytic density is known.
  std::function<Mat(const Vec&)> hessian_density;
  /// Full second-derivative measure; empty when the singular part is not
  /// available in closed form.
  std::optional<SecondDerivativeMeasure> measure;
  Growth growth;
  /// True when f is C^2, so the Laplacian is defined pointwise.
  bool smooth = false;
  /// Per-axis coordinates of axis-aligned kinks; quadrature splits there.
  std::vector<std::vector<double>> kinks;
  /// Descriptor the function was built from (empty for derived oracles such as
  /// quadrature mollifications and ball extensions).
  std::optional<CorpusSpec> descriptor;

  double operator()(const Vec& x) const { return eval(x); }
  bool has_hessian() const { return static_cast<bool>(hessian_density); }
};

/// Builds the analytic oracle for a corpus descriptor. Throws ConfigError on
/// malformed descriptors (non-PSD quadratic, dimension mismatch, ...).
ConvexFunction make_corpus_function(const CorpusSpec& spec, std::string id = {});

/// Least-norm subgradient p(x).
Vec subgradient(const ConvexFunction& f, const Vec& x);

struct MollifyOptions {
  int hermite_order = 32;
  /// Use the family's closed-form Gaussian smoothing where one exists.
  bool prefer_closed_form = true;
};

/// f_eps(x) = E[f(x + eps Z)], Z ~ N(0, I). Closed form for quadratic and
/// ridge-sum families, tensor Gauss–Hermite otherwise.
ConvexFunction mollify(const ConvexFunction& f, double eps, const MollifyOptions& opts = {});

/// Convex extension of a function known on the closed unit ball. Outside the
/// ball the value is the supremum of chord extrapolations along the ray
/// through z, found on a grid of `grid` points plus one Richardson step.
ConvexFunction extend_from_ball(const ConvexFunction& f_ball, int grid = 1000);

/// (C_lip / r) * sup_{B(center, 2r)} |f| with C_lip = 2d, the sup taken over a
/// deterministic Halton sample of the ball.
double lipschitz_on_ball(const ConvexFunction& f, const Vec& center, double r, int samples = 4096);

inline double lipschitz_constant_factor(int d) { return 2.0 * d; }

struct TestFunction;

/// (f, d_i d_j phi) = int f(x) phi_ij(x) dx by tensor Gauss–Legendre over the
/// support box of phi (0-based indices).
double second_derivative_pairing(const ConvexFunction& f, const TestFunction& phi, int i, int j,
                                 int order = 64);

/// x -> f(Sx) as a new analytic oracle (descriptor-level composition).
ConvexFunction compose_linear(const ConvexFunction& f, const Mat& S);

// ---------------------------------------------------------------------------
// Sampled invariant checks

struct InvariantCheck {
  std::string name;
  double worst = 0.0;  ///< largest violation found (<= 0 means none)
  bool pass = true;
};

/// Midpoint convexity, subgradient inequality, growth bound and PSD density on
/// `samples` random points (pairs) drawn from a seeded stream.
std::vector<InvariantCheck> check_invariants(const ConvexFunction& f, std::uint64_t seed,
                                             int samples = 10000);

}  // namespace cvx
