// Copyright (c) barrier-blo contributors
#pragma once

#include <Eigen/Core>

#include "barrier_blo/errors.hpp"

namespace bblo {

/// Dimensions of a bilevel decision space: n upper-level and m lower-level
/// variables.
struct Dims {
  int n = 0;
  int m = 0;
  int size() const { return n + m; }

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// The concatenated decision vector z = (x, y) with a declared (n, m) split.
///
/// A default-constructed Iterate is an empty placeholder; every other
/// constructor enforces n >= 1, m >= 1, length n + m, and finite entries.
class Iterate {
 public:
  Iterate() = default;

  Iterate(Eigen::VectorXd data, int n, int m) : data_(std::move(data)), dims_{n, m} {
    if (n < 1 || m < 1) {
      throw Error("Iterate: dimensions must satisfy n >= 1 and m >= 1");
    }
    if (data_.size() != n + m) {
      throw Error("Iterate: data length does not match n + m");
    }
    if (!data_.allFinite()) {
      throw Error("Iterate: entries must be finite");
    }
  }

  static Iterate zero(int n, int m) { return Iterate(Eigen::VectorXd::Zero(n + m), n, m); }

  static Iterate from_parts(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::VectorXd data(x.size() + y.size());
    data << x, y;
    return Iterate(std::move(data), static_cast<int>(x.size()), static_cast<int>(y.size()));
  }

  const Eigen::VectorXd& data() const { return data_; }
  Dims dims() const { return dims_; }
  int n() const { return dims_.n; }
  int m() const { return dims_.m; }
  int size() const { return dims_.size(); }
  bool empty() const { return data_.size() == 0; }

  auto x() const { return data_.head(dims_.n); }
  auto y() const { return data_.tail(dims_.m); }

  /// New iterate at z + t * step, keeping the same split.
  Iterate advanced(double t, const Eigen::VectorXd& step) const {
    return Iterate(data_ + t * step, dims_.n, dims_.m);
  }

 private:
  Eigen::VectorXd data_;
  Dims dims_;
};

}  // namespace bblo
