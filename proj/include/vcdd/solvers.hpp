#pragma once

#include "vcdd/common.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace vcdd {

struct FitMeta {
  std::string solver;
  std::int64_t iterations = 0;
  Index rank = 0;              // LS: numerical rank of the (bias-augmented) design
  double residual = 0.0;       // LS: ||A c - y|| / ||y||
  bool converged = true;
  double kkt_violation = 0.0;  // SVM: max_{I_up}(-y G) - min_{I_low}(-y G) at exit
  double primal = 0.0;
  double dual = 0.0;
  double duality_gap = 0.0;    // SVM: (primal - dual) / max(|primal|, |dual|)
};

// Linear decision function sign(<w, z> + b); a zero score is classified +1.
class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(Vector w, double b, FitMeta meta = {});

  const Vector& w() const { return w_; }
  double b() const { return b_; }
  // ||w||^2, bias excluded.
  double norm_sq() const { return norm_sq_; }
  const FitMeta& meta() const { return meta_; }

  Vector scores(const Matrix& z) const;
  Vector predict(const Matrix& z) const;

 private:
  Vector w_;
  double b_ = 0.0;
  double norm_sq_ = 0.0;
  FitMeta meta_;
};

struct LsOptions {
  bool fit_bias = true;
  // Singular values at or below max(n, p) * sigma_max * rcond are dropped.
  double rcond = 1e-12;
};

// Minimum-norm least squares through the SVD pseudo-inverse. With fit_bias the
// constant column is part of the minimized norm; norm_sq() still excludes it.
LinearModel fit_min_norm_ls(const Matrix& z, const Vector& y, const LsOptions& opts = {});

inline constexpr double kDefaultSvmC = 64.0;

struct SvmOptions {
  double C = kDefaultSvmC;
  double tolerance = 1e-3;
  double gap_tolerance = 1e-2;  // relative primal-dual gap
  std::int64_t max_iterations = 10'000'000;
  double support_threshold = 1e-8;  // relative to C
};

struct SvmFit {
  LinearModel model;
  Vector alphas;
  Index n_support = 0;
  double C = kDefaultSvmC;
};

// Soft-margin linear SVM, solved in the dual with two-variable updates on the
// maximal violating pair. Kernel matrix is held in memory (n x n).
SvmFit fit_linear_svm(const Matrix& z, const Vector& y, const SvmOptions& opts = {});

double zero_one_error(const LinearModel& model, const Matrix& z, const Vector& y);

void save_linear_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_linear_model(const std::filesystem::path& path);

void check_labels(const Vector& y, Index rows);

}  // namespace vcdd
