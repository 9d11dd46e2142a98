#pragma once

#include <Eigen/Dense>

#include <limits>
#include <span>
#include <vector>

namespace cvx {

/// Largest ambient dimension any estimator supports. Vectors and matrices
/// below are stack-allocated up to this size, so hot loops never touch the heap.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

inline Vec zeros(int d) { return Vec::Zero(d); }

inline Vec unit(int d, int i) {
  Vec e = Vec::Zero(d);
  e(i) = 1.0;
  return e;
}

inline Vec from_values(std::span<const double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

inline Vec from_values(std::initializer_list<double> v) {
  return from_values(std::span<const double>(v.begin(), v.size()));
}

inline Mat identity(int d) { return Mat::Identity(d, d); }

/// Smallest eigenvalue of the symmetric part of m.
inline double min_eigenvalue(const Mat& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_abs_eigenvalue(const Mat& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Mat& m, double tol) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_psd(const Mat& m, double tol = 1e-10) {
  return is_symmetric(m, tol * (1.0 + m.cwiseAbs().maxCoeff())) && min_eigenvalue(m) >= -tol;
}

/// 2-norm condition number; infinity for singular input.
inline double condition_number(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 1.0;
  const double lo = sv(sv.size() - 1);
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / lo;
}

}  // namespace cvx
