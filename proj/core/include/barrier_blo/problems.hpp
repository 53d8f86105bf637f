// Copyright (c) barrier-blo contributors
#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>

#include "barrier_blo/problem.hpp"

namespace bblo {

/// Random dense matrix with singular values log-uniform in [1/cond_max, 1]
/// (unit spectral norm), so the condition number never exceeds cond_max.
Eigen::MatrixXd random_conditioned_matrix(int dim, double cond_max, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Synthetic instance: f(x, y) = sin(c'x + d'y) + log(||x + y||^2 + 1) over
// the lower level g(x, y) = 1/2 ||H y - x||^2, with x, y in R^dim.
// ---------------------------------------------------------------------------

struct SyntheticSpec {
  int dim = 20;
  Eigen::VectorXd c;
  Eigen::VectorXd d;
  Eigen::MatrixXd H;  // dim x dim, condition number <= 10 when generated
  std::uint64_t seed = 0;

  /// c, d standard normal; H with unit spectral norm and singular values
  /// log-uniform in [0.1, 1].
  static SyntheticSpec random(int dim, std::uint64_t seed);
};

std::unique_ptr<BilevelProblem> make_synthetic(SyntheticSpec spec);
std::unique_ptr<BilevelProblem> make_synthetic(std::uint64_t seed);

// ---------------------------------------------------------------------------
// Quadratic testbed: f(z) = 1/2 ||z||^2 over g(x, y) = 1/2 ||H y - x||^2.
// Everything about it is known in closed form, which makes it the reference
// instance for step-size bounds and stationarity checks.
// ---------------------------------------------------------------------------

class QuadraticTestbed final : public BilevelProblem {
 public:
  explicit QuadraticTestbed(Eigen::MatrixXd H);

  Dims dims() const override { return {dim_, dim_}; }
  double eval_f(const Iterate& z) const override;
  Eigen::VectorXd grad_f(const Iterate& z) const override;
  double eval_g(const Iterate& z) const override;
  Eigen::VectorXd grad_y_g(const Iterate& z) const override;
  Eigen::VectorXd vjp_grad_y_g(const Iterate& z, const Eigen::VectorXd& v) const override;
  bool has_hvp_yy() const override { return true; }
  Eigen::VectorXd hvp_yy(const Iterate& z, const Eigen::VectorXd& v) const override;
  bool has_exact_yy_solve() const override { return true; }
  Eigen::VectorXd solve_yy(const Iterate& z, const Eigen::VectorXd& rhs) const override;

  /// Gradient Lipschitz constant of f (identity Hessian).
  double lipschitz_f() const { return 1.0; }
  /// Gradient Lipschitz constant of h(z) = ||A z||^2 with A = [-H', H'H]:
  /// L_h = 2 sigma_max(A)^2, exact for this quadratic.
  double lipschitz_h() const { return lipschitz_h_; }

  /// The unique solution of the relaxed problem (interior, multiplier 0).
  Iterate minimizer() const { return Iterate::zero(dim_, dim_); }

  Eigen::VectorXd y_star(const Eigen::VectorXd& x) const;  // H^{-1} x
  /// Implicit objective f(x, y_star(x)), for finite-difference hypergradient
  /// cross-checks.
  double implicit_value(const Eigen::VectorXd& x) const;

  const Eigen::MatrixXd& H() const { return H_; }

 private:
  int dim_;
  Eigen::MatrixXd H_;
  Eigen::MatrixXd HtH_;
  Eigen::LLT<Eigen::MatrixXd> llt_;           // of H'H
  Eigen::PartialPivLU<Eigen::MatrixXd> luH_;  // of H
  double lipschitz_h_ = 0.0;
};

std::unique_ptr<QuadraticTestbed> make_quadratic_testbed(int dim, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Data hyper-cleaning: per-sample training weights sigma(x_i) are learned so
// a softmax linear classifier trained on a corrupted set minimizes clean
// validation loss.
// ---------------------------------------------------------------------------

struct DhcSpec {
  int num_train = 200;
  int num_val = 100;
  int num_test = 200;
  int feature_dim = 5;
  int num_classes = 3;
  double corruption_rate = 0.25;  // in [0, 1)
  double reg_coeff = 1e-3;        // ridge coefficient on the classifier, > 0
  std::uint64_t seed = 0;

  void validate() const;
};

struct Dataset {
  Eigen::MatrixXd features;          // N x feature_dim
  Eigen::VectorXi labels;            // in [0, num_classes)
  std::vector<bool> corrupted_mask;  // generator ground truth, size N

  int size() const { return static_cast<int>(features.rows()); }
};

struct DhcData {
  Dataset train;  // corrupted according to the spec rate
  Dataset val;    // clean
  Dataset test;   // clean
};

/// Gaussian class blobs with unit within-class variance and class means at
/// pairwise distance >= 3 (orthonormal directions scaled by 3). Exactly
/// floor(p N_tr) training labels are reassigned to a wrong class, uniformly.
/// Deterministic in spec.seed. Requires feature_dim >= num_classes.
DhcData generate_blobs(const DhcSpec& spec);

class DhcProblem final : public BilevelProblem {
 public:
  DhcProblem(DhcData data, int num_classes, double reg_coeff);

  Dims dims() const override;
  double eval_f(const Iterate& z) const override;
  Eigen::VectorXd grad_f(const Iterate& z) const override;
  double eval_g(const Iterate& z) const override;
  Eigen::VectorXd grad_y_g(const Iterate& z) const override;
  Eigen::VectorXd vjp_grad_y_g(const Iterate& z, const Eigen::VectorXd& v) const override;
  bool has_hvp_yy() const override { return true; }
  Eigen::VectorXd hvp_yy(const Iterate& z, const Eigen::VectorXd& v) const override;

  const DhcData& data() const { return data_; }
  int num_classes() const { return num_classes_; }
  double reg_coeff() const { return reg_coeff_; }

  /// Classifier weights (num_classes x feature_dim, row-major in y).
  Eigen::MatrixXd weights_at(const Iterate& z) const;
  /// Per-sample training weights sigma(x_i).
  Eigen::VectorXd sample_weights(const Iterate& z) const;

 private:
  DhcData data_;
  int num_classes_;
  int feature_dim_;
  double reg_coeff_;
};

std::unique_ptr<DhcProblem> make_dhc(const DhcSpec& spec);

/// Plain uniformly weighted ridge-regularized softmax training (gradient
/// descent with backtracking); the comparison baseline for hyper-cleaning.
Eigen::MatrixXd train_softmax_classifier(const Dataset& train, int num_classes,
                                         double reg_coeff, int max_iter = 2000,
                                         double grad_tol = 1e-8);

double classifier_accuracy(const Eigen::MatrixXd& weights, const Dataset& data);

/// Mean softmax cross-entropy of `weights` on `data`.
double classifier_loss(const Eigen::MatrixXd& weights, const Dataset& data);

// ---------------------------------------------------------------------------
// IDX ingestion (big-endian binary image/label pairs).
// ---------------------------------------------------------------------------

/// Parses an IDX image/label file pair: magic 0x00000803 for images (count,
/// rows, cols header) and 0x00000801 for labels; pixel bytes scaled to
/// [0, 1]. Keeps at most `limit` samples (limit = 0 yields an empty
/// dataset). Throws IdxFormatError on bad magic, truncation or count
/// mismatch, IoError when a file cannot be read.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit);

}  // namespace bblo
