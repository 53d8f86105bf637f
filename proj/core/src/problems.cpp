// Copyright (c) barrier-blo contributors
#include "barrier_blo/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace bblo {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd random_gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd mat(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      mat(i, j) = normal(rng);
    }
  }
  return mat;
}

Eigen::VectorXd random_gaussian_vector(int len, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(len);
  for (int i = 0; i < len; ++i) {
    v(i) = normal(rng);
  }
  return v;
}

double sigmoid(double v) {
  if (v >= 0.0) {
    return 1.0 / (1.0 + std::exp(-v));
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// log(sum_j exp(s_j)) via the max-shift trick.
double log_sum_exp(const Eigen::VectorXd& s) {
  const double mx = s.maxCoeff();
  return mx + std::log((s.array() - mx).exp().sum());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& s) {
  const double mx = s.maxCoeff();
  Eigen::VectorXd p = (s.array() - mx).exp();
  return p / p.sum();
}

}  // namespace

Eigen::MatrixXd random_conditioned_matrix(int dim, double cond_max, std::mt19937_64& rng) {
  if (dim < 1) throw ConfigError("dim", "must be >= 1");
  if (!(cond_max >= 1.0)) throw ConfigError("cond_max", "must be >= 1");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd singular_values(dim);
  for (int i = 0; i < dim; ++i) {
    singular_values(i) = std::exp(-unit(rng) * std::log(cond_max));
  }
  // Construction caps the condition number; keep the assertion anyway so a
  // generator change cannot silently relax it.
  const double cond = singular_values.maxCoeff() / singular_values.minCoeff();
  if (cond > cond_max * (1.0 + 1e-12)) {
    throw Error("random_conditioned_matrix: condition-number cap violated");
  }
  const Eigen::MatrixXd qu =
      Eigen::HouseholderQR<Eigen::MatrixXd>(random_gaussian_matrix(dim, dim, rng))
          .householderQ();
  const Eigen::MatrixXd qv =
      Eigen::HouseholderQR<Eigen::MatrixXd>(random_gaussian_matrix(dim, dim, rng))
          .householderQ();
  return qu * singular_values.asDiagonal() * qv.transpose();
}

// ---------------------------------------------------------------------------
// Synthetic instance
// ---------------------------------------------------------------------------

SyntheticSpec SyntheticSpec::random(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SyntheticSpec spec;
  spec.dim = dim;
  spec.seed = seed;
  spec.c = random_gaussian_vector(dim, rng);
  spec.d = random_gaussian_vector(dim, rng);
  spec.H = random_conditioned_matrix(dim, 10.0, rng);
  return spec;
}

namespace {

class SyntheticProblem final : public BilevelProblem {
 public:
  explicit SyntheticProblem(SyntheticSpec spec)
      : spec_(std::move(spec)),
        HtH_(spec_.H.transpose() * spec_.H),
        llt_(HtH_) {}

  Dims dims() const override { return {spec_.dim, spec_.dim}; }

  double eval_f(const Iterate& z) const override {
    const Eigen::VectorXd u = z.x() + z.y();
    return std::sin(spec_.c.dot(z.x()) + spec_.d.dot(z.y())) + std::log1p(u.squaredNorm());
  }

  Eigen::VectorXd grad_f(const Iterate& z) const override {
    const Eigen::VectorXd u = z.x() + z.y();
    const double cs = std::cos(spec_.c.dot(z.x()) + spec_.d.dot(z.y()));
    const Eigen::VectorXd log_part = 2.0 * u / (u.squaredNorm() + 1.0);
    Eigen::VectorXd grad(2 * spec_.dim);
    grad.head(spec_.dim) = cs * spec_.c + log_part;
    grad.tail(spec_.dim) = cs * spec_.d + log_part;
    return grad;
  }

  double eval_g(const Iterate& z) const override {
    return 0.5 * (spec_.H * z.y() - z.x()).squaredNorm();
  }

  Eigen::VectorXd grad_y_g(const Iterate& z) const override {
    return spec_.H.transpose() * (spec_.H * z.y() - z.x());
  }

  Eigen::VectorXd vjp_grad_y_g(const Iterate& z, const Eigen::VectorXd& v) const override {
    (void)z;  // the Jacobian [-H', H'H] is constant
    Eigen::VectorXd out(2 * spec_.dim);
    out.head(spec_.dim) = -(spec_.H * v);
    out.tail(spec_.dim) = HtH_ * v;
    return out;
  }

  bool has_hvp_yy() const override { return true; }
  Eigen::VectorXd hvp_yy(const Iterate&, const Eigen::VectorXd& v) const override {
    return HtH_ * v;
  }

  bool has_exact_yy_solve() const override { return true; }
  Eigen::VectorXd solve_yy(const Iterate&, const Eigen::VectorXd& rhs) const override {
    return llt_.solve(rhs);
  }

 private:
  SyntheticSpec spec_;
  Eigen::MatrixXd HtH_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace

std::unique_ptr<BilevelProblem> make_synthetic(SyntheticSpec spec) {
  if (spec.dim < 1 || spec.c.size() != spec.dim || spec.d.size() != spec.dim ||
      spec.H.rows() != spec.dim || spec.H.cols() != spec.dim) {
    throw ConfigError("SyntheticSpec", "inconsistent dimensions");
  }
  return std::make_unique<SyntheticProblem>(std::move(spec));
}

std::unique_ptr<BilevelProblem> make_synthetic(std::uint64_t seed) {
  return make_synthetic(SyntheticSpec::random(20, seed));
}

// ---------------------------------------------------------------------------
// Quadratic testbed
// ---------------------------------------------------------------------------

QuadraticTestbed::QuadraticTestbed(Eigen::MatrixXd H)
    : dim_(static_cast<int>(H.rows())), H_(std::move(H)) {
  if (dim_ < 1 || H_.cols() != dim_) {
    throw ConfigError("H", "must be square and non-empty");
  }
  HtH_ = H_.transpose() * H_;
  llt_.compute(HtH_);
  luH_.compute(H_);
  // A = [-H', H'H] is the Jacobian of z -> grad_y g; h(z) = ||A z||^2 has
  // Hessian 2 A'A, so L_h = 2 sigma_max(A)^2 exactly.
  Eigen::MatrixXd A(dim_, 2 * dim_);
  A.leftCols(dim_) = -H_.transpose();
  A.rightCols(dim_) = HtH_;
  const double sigma_max = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
  lipschitz_h_ = 2.0 * sigma_max * sigma_max;
}

double QuadraticTestbed::eval_f(const Iterate& z) const { return 0.5 * z.data().squaredNorm(); }

Eigen::VectorXd QuadraticTestbed::grad_f(const Iterate& z) const { return z.data(); }

double QuadraticTestbed::eval_g(const Iterate& z) const {
  return 0.5 * (H_ * z.y() - z.x()).squaredNorm();
}

Eigen::VectorXd QuadraticTestbed::grad_y_g(const Iterate& z) const {
  return H_.transpose() * (H_ * z.y() - z.x());
}

Eigen::VectorXd QuadraticTestbed::vjp_grad_y_g(const Iterate&, const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(2 * dim_);
  out.head(dim_) = -(H_ * v);
  out.tail(dim_) = HtH_ * v;
  return out;
}

Eigen::VectorXd QuadraticTestbed::hvp_yy(const Iterate&, const Eigen::VectorXd& v) const {
  return HtH_ * v;
}

Eigen::VectorXd QuadraticTestbed::solve_yy(const Iterate&, const Eigen::VectorXd& rhs) const {
  return llt_.solve(rhs);
}

Eigen::VectorXd QuadraticTestbed::y_star(const Eigen::VectorXd& x) const {
  return luH_.solve(x);
}

double QuadraticTestbed::implicit_value(const Eigen::VectorXd& x) const {
  return 0.5 * x.squaredNorm() + 0.5 * y_star(x).squaredNorm();
}

std::unique_ptr<QuadraticTestbed> make_quadratic_testbed(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return std::make_unique<QuadraticTestbed>(random_conditioned_matrix(dim, 10.0, rng));
}

// ---------------------------------------------------------------------------
// Data hyper-cleaning
// ---------------------------------------------------------------------------

void DhcSpec::validate() const {
  if (num_train < 1) throw ConfigError("num_train", "must be >= 1");
  if (num_val < 1) throw ConfigError("num_val", "must be >= 1");
  if (num_test < 1) throw ConfigError("num_test", "must be >= 1");
  if (feature_dim < 1) throw ConfigError("feature_dim", "must be >= 1");
  if (num_classes < 2) throw ConfigError("num_classes", "must be >= 2");
  if (feature_dim < num_classes) {
    throw ConfigError("feature_dim", "must be >= num_classes for the blob generator");
  }
  if (!(corruption_rate >= 0.0 && corruption_rate < 1.0)) {
    throw ConfigError("corruption_rate", "must be in [0, 1)");
  }
  if (!(reg_coeff > 0.0)) throw ConfigError("reg_coeff", "must be > 0");
}

DhcData generate_blobs(const DhcSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Class means on orthonormal directions scaled by 3.5: pairwise distance
  // 3.5*sqrt(2) > 3, enough margin for a linear classifier through the
  // origin to stay above 95% test accuracy on clean labels.
  const Eigen::MatrixXd q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(
          random_gaussian_matrix(spec.feature_dim, spec.num_classes, rng))
          .householderQ() *
      Eigen::MatrixXd::Identity(spec.feature_dim, spec.num_classes);
  const Eigen::MatrixXd means = 3.5 * q;

  const auto make_split = [&](int count, double rate) {
    Dataset ds;
    ds.features.resize(count, spec.feature_dim);
    ds.labels.resize(count);
    ds.corrupted_mask.assign(static_cast<std::size_t>(count), false);
    for (int i = 0; i < count; ++i) {
      const int label = i % spec.num_classes;
      ds.labels(i) = label;
      for (int j = 0; j < spec.feature_dim; ++j) {
        ds.features(i, j) = means(j, label) + normal(rng);
      }
    }
    const int corrupt = static_cast<int>(std::floor(rate * count));
    if (corrupt > 0) {
      std::vector<int> order(static_cast<std::size_t>(count));
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::uniform_int_distribution<int> wrong(0, spec.num_classes - 2);
      for (int i = 0; i < corrupt; ++i) {
        const int idx = order[static_cast<std::size_t>(i)];
        int relabel = wrong(rng);
        if (relabel >= ds.labels(idx)) ++relabel;  // skip the true class
        ds.labels(idx) = relabel;
        ds.corrupted_mask[static_cast<std::size_t>(idx)] = true;
      }
    }
    return ds;
  };

  DhcData data;
  data.train = make_split(spec.num_train, spec.corruption_rate);
  data.val = make_split(spec.num_val, 0.0);
  data.test = make_split(spec.num_test, 0.0);
  return data;
}

DhcProblem::DhcProblem(DhcData data, int num_classes, double reg_coeff)
    : data_(std::move(data)),
      num_classes_(num_classes),
      feature_dim_(static_cast<int>(data_.train.features.cols())),
      reg_coeff_(reg_coeff) {
  if (num_classes_ < 2) throw ConfigError("num_classes", "must be >= 2");
  if (!(reg_coeff_ > 0.0)) throw ConfigError("reg_coeff", "must be > 0");
  if (data_.train.size() < 1 || data_.val.size() < 1) {
    throw ConfigError("data", "train and val splits must be non-empty");
  }
  if (data_.val.features.cols() != feature_dim_) {
    throw ConfigError("data", "val feature dimension mismatch");
  }
}

Dims DhcProblem::dims() const { return {data_.train.size(), num_classes_ * feature_dim_}; }

Eigen::MatrixXd DhcProblem::weights_at(const Iterate& z) const {
  return Eigen::Map<const RowMat>(z.data().data() + z.n(), num_classes_, feature_dim_);
}

Eigen::VectorXd DhcProblem::sample_weights(const Iterate& z) const {
  Eigen::VectorXd w(z.n());
  for (int i = 0; i < z.n(); ++i) {
    w(i) = sigmoid(z.x()(i));
  }
  return w;
}

double DhcProblem::eval_f(const Iterate& z) const {
  const RowMat W = Eigen::Map<const RowMat>(z.data().data() + z.n(), num_classes_, feature_dim_);
  double loss = 0.0;
  for (int i = 0; i < data_.val.size(); ++i) {
    const Eigen::VectorXd s = W * data_.val.features.row(i).transpose();
    loss += log_sum_exp(s) - s(data_.val.labels(i));
  }
  return loss / data_.val.size();
}

Eigen::VectorXd DhcProblem::grad_f(const Iterate& z) const {
  const RowMat W = Eigen::Map<const RowMat>(z.data().data() + z.n(), num_classes_, feature_dim_);
  RowMat G = RowMat::Zero(num_classes_, feature_dim_);
  for (int i = 0; i < data_.val.size(); ++i) {
    const Eigen::VectorXd a = data_.val.features.row(i).transpose();
    Eigen::VectorXd p = softmax(W * a);
    p(data_.val.labels(i)) -= 1.0;
    G.noalias() += p * a.transpose();
  }
  G /= data_.val.size();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(z.size());  // f does not depend on x
  grad.tail(z.m()) = Eigen::Map<const Eigen::VectorXd>(G.data(), z.m());
  return grad;
}

double DhcProblem::eval_g(const Iterate& z) const {
  const RowMat W = Eigen::Map<const RowMat>(z.data().data() + z.n(), num_classes_, feature_dim_);
  const int count = data_.train.size();
  double loss = 0.0;
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd s = W * data_.train.features.row(i).transpose();
    loss += sigmoid(z.x()(i)) * (log_sum_exp(s) - s(data_.train.labels(i)));
  }
  return loss / count + reg_coeff_ * z.y().squaredNorm();
}

Eigen::VectorXd DhcProblem::grad_y_g(const Iterate& z) const {
  const RowMat W = Eigen::Map<const RowMat>(z.data().data() + z.n(), num_classes_, feature_dim_);
  const int count = data_.train.size();
  RowMat G = RowMat::Zero(num_classes_, feature_dim_);
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd a = data_.train.features.row(i).transpose();
    Eigen::VectorXd p = softmax(W * a);
    p(data_.train.labels(i)) -= 1.0;
    G.noalias() += (sigmoid(z.x()(i)) / count) * (p * a.transpose());
  }
  Eigen::VectorXd grad = Eigen::Map<const Eigen::VectorXd>(G.data(), z.m());
  grad += 2.0 * reg_coeff_ * z.y();
  return grad;
}

Eigen::VectorXd DhcProblem::vjp_grad_y_g(const Iterate& z, const Eigen::VectorXd& v) const {
  const RowMat W = Eigen::Map<const RowMat>(z.data().data() + z.n(), num_classes_, feature_dim_);
  const RowMat V = Eigen::Map<const RowMat>(v.data(), num_classes_, feature_dim_);
  const int count = data_.train.size();

  Eigen::VectorXd out = Eigen::VectorXd::Zero(z.size());
  RowMat Gy = RowMat::Zero(num_classes_, feature_dim_);
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd a = data_.train.features.row(i).transpose();
    Eigen::VectorXd p = softmax(W * a);
    const Eigen::VectorXd q = V * a;
    // x-block: d(grad_y g)/dx_i = sigmoid'(x_i)/N * grad_y loss_i, so the
    // transposed product is a per-sample inner product.
    Eigen::VectorXd residual = p;
    residual(data_.train.labels(i)) -= 1.0;
    const double s = sigmoid(z.x()(i));
    out(i) = (s * (1.0 - s) / count) * residual.dot(q);
    // y-block: per-sample softmax Hessian applied matrix-free.
    const Eigen::VectorXd hq = p.cwiseProduct(q) - p.dot(q) * p;
    Gy.noalias() += (s / count) * (hq * a.transpose());
  }
  out.tail(z.m()) = Eigen::Map<const Eigen::VectorXd>(Gy.data(), z.m());
  out.tail(z.m()) += 2.0 * reg_coeff_ * v;
  return out;
}

Eigen::VectorXd DhcProblem::hvp_yy(const Iterate& z, const Eigen::VectorXd& v) const {
  const RowMat W = Eigen::Map<const RowMat>(z.data().data() + z.n(), num_classes_, feature_dim_);
  const RowMat V = Eigen::Map<const RowMat>(v.data(), num_classes_, feature_dim_);
  const int count = data_.train.size();
  RowMat Gy = RowMat::Zero(num_classes_, feature_dim_);
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd a = data_.train.features.row(i).transpose();
    const Eigen::VectorXd p = softmax(W * a);
    const Eigen::VectorXd q = V * a;
    const Eigen::VectorXd hq = p.cwiseProduct(q) - p.dot(q) * p;
    Gy.noalias() += (sigmoid(z.x()(i)) / count) * (hq * a.transpose());
  }
  Eigen::VectorXd out = Eigen::Map<const Eigen::VectorXd>(Gy.data(), z.m());
  out += 2.0 * reg_coeff_ * v;
  return out;
}

std::unique_ptr<DhcProblem> make_dhc(const DhcSpec& spec) {
  spec.validate();
  return std::make_unique<DhcProblem>(generate_blobs(spec), spec.num_classes, spec.reg_coeff);
}

Eigen::MatrixXd train_softmax_classifier(const Dataset& train, int num_classes,
                                         double reg_coeff, int max_iter, double grad_tol) {
  if (train.size() < 1) throw ConfigError("train", "must be non-empty");
  const int feature_dim = static_cast<int>(train.features.cols());
  const int count = train.size();

  const auto loss_and_grad = [&](const RowMat& W, RowMat* grad) {
    double loss = reg_coeff * W.squaredNorm();
    if (grad) *grad = 2.0 * reg_coeff * W;
    for (int i = 0; i < count; ++i) {
      const Eigen::VectorXd a = train.features.row(i).transpose();
      const Eigen::VectorXd s = W * a;
      loss += (log_sum_exp(s) - s(train.labels(i))) / count;
      if (grad) {
        Eigen::VectorXd p = softmax(s);
        p(train.labels(i)) -= 1.0;
        grad->noalias() += (1.0 / count) * (p * a.transpose());
      }
    }
    return loss;
  };

  RowMat W = RowMat::Zero(num_classes, feature_dim);
  RowMat grad(num_classes, feature_dim);
  double loss = loss_and_grad(W, &grad);
  for (int it = 0; it < max_iter; ++it) {
    const double g2 = grad.squaredNorm();
    if (std::sqrt(g2) <= grad_tol) {
      break;
    }
    double t = 1.0;
    bool accepted = false;
    for (int j = 0; j < 60; ++j, t *= 0.5) {
      const RowMat W_t = W - t * grad;
      const double loss_t = loss_and_grad(W_t, nullptr);
      if (loss_t <= loss - 1e-4 * t * g2) {
        W = W_t;
        loss = loss_and_grad(W, &grad);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      break;
    }
  }
  return W;
}

double classifier_accuracy(const Eigen::MatrixXd& weights, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  int correct = 0;
  for (int i = 0; i < data.size(); ++i) {
    Eigen::Index pred = 0;
    (weights * data.features.row(i).transpose()).maxCoeff(&pred);
    if (static_cast<int>(pred) == data.labels(i)) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / data.size();
}

double classifier_loss(const Eigen::MatrixXd& weights, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  double loss = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd s = weights * data.features.row(i).transpose();
    loss += log_sum_exp(s) - s(data.labels(i));
  }
  return loss / data.size();
}

}  // namespace bblo
