#pragma once

#include <Eigen/Dense>
#include <string>

#include "machines/errors.hpp"

namespace machines {

/// Pointwise nonlinearity with an explicit derivative.
/// The relu derivative at 0 is defined as 0.
class Activation {
 public:
  enum class Kind { Identity, Relu, Tanh };

  static const Activation& identity();
  static const Activation& relu();
  static const Activation& tanh();
  static const Activation& by_name(const std::string& name);

  Kind kind() const { return kind_; }
  const char* name() const;

  double apply(double x) const;
  double derivative(double x) const;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd derivative(const Eigen::MatrixXd& x) const;

 private:
  explicit Activation(Kind k) : kind_(k) {}
  Kind kind_;
};

}  // namespace machines
