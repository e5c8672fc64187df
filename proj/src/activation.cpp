#include "machines/activation.hpp"

#include <cmath>

namespace machines {

const Activation& Activation::identity() {
  static const Activation a(Kind::Identity);
  return a;
}

const Activation& Activation::relu() {
  static const Activation a(Kind::Relu);
  return a;
}

const Activation& Activation::tanh() {
  static const Activation a(Kind::Tanh);
  return a;
}

const Activation& Activation::by_name(const std::string& name) {
  if (name == "identity") return identity();
  if (name == "relu") return relu();
  if (name == "tanh") return tanh();
  throw Error("unknown activation: " + name);
}

const char* Activation::name() const {
  switch (kind_) {
    case Kind::Identity: return "identity";
    case Kind::Relu: return "relu";
    case Kind::Tanh: return "tanh";
  }
  return "?";
}

double Activation::apply(double x) const {
  switch (kind_) {
    case Kind::Identity: return x;
    case Kind::Relu: return x > 0.0 ? x : 0.0;
    case Kind::Tanh: return std::tanh(x);
  }
  return x;
}

double Activation::derivative(double x) const {
  switch (kind_) {
    case Kind::Identity: return 1.0;
    case Kind::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Kind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

Eigen::MatrixXd Activation::apply(const Eigen::MatrixXd& x) const {
  switch (kind_) {
    case Kind::Identity: return x;
    case Kind::Relu: return x.cwiseMax(0.0);
    case Kind::Tanh: return x.array().tanh().matrix();
  }
  return x;
}

Eigen::MatrixXd Activation::derivative(const Eigen::MatrixXd& x) const {
  switch (kind_) {
    case Kind::Identity: return Eigen::MatrixXd::Ones(x.rows(), x.cols());
    case Kind::Relu:
      return (x.array() > 0.0).cast<double>().matrix();
    case Kind::Tanh:
      return (1.0 - x.array().tanh().square()).matrix();
  }
  return Eigen::MatrixXd::Ones(x.rows(), x.cols());
}

}  // namespace machines
