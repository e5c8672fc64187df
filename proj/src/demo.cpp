#include "machines/demo.hpp"

#include <cstdio>

#include "machines/errors.hpp"
#include "machines/linear.hpp"

namespace machines {

namespace {

constexpr Index kDim = 8;

Eigen::MatrixXd unit(Index row, Index col, double w) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kDim, kDim);
  m(row, col) = w;
  return m;
}

std::string format_vector(const char* label, const Eigen::VectorXd& v) {
  std::string out(label);
  out += " [";
  char buf[64];
  for (Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%g", i ? ", " : "", v(i));
    out += buf;
  }
  out += "]\n";
  return out;
}

}  // namespace

std::vector<Eigen::MatrixXd> shortcut_demo_operators(double w) {
  const Eigen::MatrixXd f1 = unit(2, 0, w) + unit(2, 1, w);
  const Eigen::MatrixXd f2 = unit(4, 0, w);
  const Eigen::MatrixXd f3 = unit(3, 2, w);
  const Eigen::MatrixXd f4 = unit(4, 3, w) + unit(5, 3, w) + unit(6, 3, w);
  const Eigen::MatrixXd f5 = unit(7, 5, w);
  return {f1, f2 + f3, f4, f5};
}

Eigen::VectorXd shortcut_demo_closed_form(double w, const Eigen::VectorXd& x) {
  if (x.size() != kDim) throw SizeMismatch("demo input must have 8 entries");
  Eigen::VectorXd y(kDim);
  const double f1 = w * (x(0) + x(1));
  const double y3 = f1 + x(2);
  const double y4 = w * y3 + x(3);
  const double f4 = w * y4;  // same value fans out to x5, x6, x7
  y(0) = x(0);
  y(1) = x(1);
  y(2) = y3;
  y(3) = y4;
  y(4) = w * x(0) + f4 + x(4);
  y(5) = f4 + x(5);
  y(6) = f4 + x(6);
  y(7) = w * (f4 + x(5)) + x(7);
  return y;
}

Eigen::VectorXd shortcut_demo_machine_eval(double w, const Eigen::VectorXd& x) {
  if (x.size() != kDim) throw SizeMismatch("demo input must have 8 entries");
  Eigen::VectorXd h = x;
  // all four summands have depth 1, so each resolvent is id + f_i
  for (const Eigen::MatrixXd& f : shortcut_demo_operators(w)) h += f * h;
  return h;
}

std::string shortcut_demo_trace() {
  const double w = 1.0;
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(kDim);
  const auto ops = shortcut_demo_operators(w);
  const char* names[] = {"after f1     ", "after f2+f3  ", "after f4     ",
                         "after f5     "};

  std::string out;
  out +=
      "shortcut demo: 8 scalar spaces, 5 unit maps, evaluated as the sum of\n"
      "depth-1 machines f1, f2+f3, f4, f5 (each independent of the "
      "following)\n";
  out += format_vector("input x      ", x);
  Eigen::VectorXd h = x;
  for (size_t i = 0; i < ops.size(); ++i) {
    h += ops[i] * h;
    out += format_vector(names[i], h);
  }
  const Eigen::VectorXd closed = shortcut_demo_closed_form(w, x);
  out += format_vector("closed form  ", closed);

  char buf[64];
  for (Index i = 0; i < kDim; ++i) {
    std::snprintf(buf, sizeof buf, "y_%ld = %g\n", static_cast<long>(i + 1),
                  h(i));
    out += buf;
  }
  out += (h - closed).cwiseAbs().maxCoeff() == 0.0
             ? "matches closed form: yes\n"
             : "matches closed form: NO\n";
  return out;
}

}  // namespace machines
