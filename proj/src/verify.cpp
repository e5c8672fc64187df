#include "machines/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "machines/bench.hpp"
#include "machines/demo.hpp"
#include "machines/errors.hpp"
#include "machines/generate.hpp"
#include "machines/linear.hpp"
#include "machines/train.hpp"

namespace machines {

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// |analytic - approx|, max-norm, over max(1, |analytic|).
double rel_error(const Eigen::MatrixXd& analytic,
                 const Eigen::MatrixXd& approx) {
  return max_abs(analytic - approx) / std::max(1.0, max_abs(analytic));
}

double pairing_loss(const MachineState& s, const Eigen::MatrixXd& v0,
                    const Eigen::MatrixXd& u0) {
  return (v0.cwiseProduct(s.y) + u0.cwiseProduct(s.z)).sum();
}

Index pick(RandomEngine& rng, Index lo, Index hi) {
  return lo + static_cast<Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

DenseMachine pick_dense(RandomEngine& rng, Index max_n, int max_blocks,
                        const Activation& act) {
  const Index n = pick(rng, 2, max_n);
  const int blocks =
      static_cast<int>(pick(rng, 1, std::min<Index>(max_blocks, n)));
  return random_dense_machine(n, blocks, act, rng);
}

ConvMachine pick_conv(RandomEngine& rng, GridTag style, const Activation& act,
                      Index max_t = 6, Index max_c = 5) {
  const Index n_t = pick(rng, 2, max_t);
  const Index n_c = pick(rng, 2, max_c);
  const int groups = static_cast<int>(pick(rng, 1, std::min<Index>(3, n_c)));
  const Index k = pick(rng, 1, std::min<Index>(3, n_t));
  return random_conv_machine(n_t, n_c, groups, k, style, act, rng);
}

}  // namespace

CheckReport make_report(std::string name, double max_abs_error,
                        double tolerance, std::string details) {
  CheckReport r;
  r.name = std::move(name);
  r.max_abs_error = max_abs_error;
  r.tolerance = tolerance;
  r.passed = max_abs_error <= tolerance;
  r.details = std::move(details);
  return r;
}

double finite_diff_directional(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& x, const Eigen::VectorXd& dir, double step) {
  if (step <= 0.0) throw Error("step must be positive");
  const double plus = fn(x + step * dir);
  const double minus = fn(x - step * dir);
  if (!std::isfinite(plus) || !std::isfinite(minus))
    throw NonFiniteEvaluation("function returned a non-finite value");
  return (plus - minus) / (2.0 * step);
}

double machine_residual(const DenseMachine& m, const MachineState& s,
                        const Eigen::MatrixXd& y0, const Eigen::MatrixXd& z0) {
  const double ry = max_abs(s.y - m.op().masked * s.z - y0);
  const double rz = max_abs(s.z - m.activation().apply(s.y) - z0);
  return std::max(ry, rz);
}

double machine_residual(const ConvMachine& m, const MachineState& s,
                        const Eigen::MatrixXd& y0, const Eigen::MatrixXd& z0) {
  const double ry = max_abs(s.y - m.masked_apply(s.z) - y0);
  const double rz = max_abs(s.z - m.activation().apply(s.y) - z0);
  return std::max(ry, rz);
}

double dual_residual(const DenseMachine& m, const MachineState& s,
                     const DualState& d, const Eigen::MatrixXd& v0,
                     const Eigen::MatrixXd& u0) {
  const double ru = max_abs(d.u - m.op().masked.transpose() * d.v - u0);
  const double rv =
      max_abs(d.v - m.activation().derivative(s.y).cwiseProduct(d.u) - v0);
  return std::max(ru, rv);
}

double dual_residual(const ConvMachine& m, const MachineState& s,
                     const DualState& d, const Eigen::MatrixXd& v0,
                     const Eigen::MatrixXd& u0) {
  const double ru = max_abs(d.u - m.masked_transpose_apply(d.v) - u0);
  const double rv =
      max_abs(d.v - m.activation().derivative(s.y).cwiseProduct(d.u) - v0);
  return std::max(ru, rv);
}

CheckReport check_machine_residual(const DenseMachine& m,
                                   const Eigen::MatrixXd& y0,
                                   const Eigen::MatrixXd& z0) {
  const MachineState s = m.forward(y0, z0);
  return make_report("machine_residual_dense", machine_residual(m, s, y0, z0),
                     1e-8);
}

CheckReport check_machine_residual(const ConvMachine& m,
                                   const Eigen::MatrixXd& y0,
                                   const Eigen::MatrixXd& z0) {
  const MachineState s = m.forward(y0, z0);
  return make_report("machine_residual_conv", machine_residual(m, s, y0, z0),
                     1e-8);
}

CheckReport check_depth_bound(const DenseMachine& m, const Eigen::MatrixXd& y0,
                              const Eigen::MatrixXd& z0) {
  const int sweeps = 2 * m.num_blocks() + 1;
  const MachineState exact = m.forward(y0, z0);
  const MachineState a = m.forward_naive(y0, z0, sweeps);
  const MachineState b = m.forward_naive(y0, z0, sweeps + 1);
  double err = std::max(max_abs(a.y - b.y), max_abs(a.z - b.z));
  err = std::max(err, std::max(max_abs(a.y - exact.y), max_abs(a.z - exact.z)));
  char details[64];
  std::snprintf(details, sizeof details, "sweeps=%d", sweeps);
  return make_report("depth_bound", err, 1e-10, details);
}

CheckReport check_thm3_forward_mode(const DenseMachine& m,
                                    const Eigen::VectorXd& y0,
                                    const Eigen::VectorXd& z0,
                                    const Eigen::MatrixXd& dir_p,
                                    const Eigen::VectorXd& dir_y0,
                                    const Eigen::VectorXd& dir_z0,
                                    double tolerance) {
  const Index n = m.size();
  const MachineState s = m.forward(y0, z0);
  Eigen::MatrixXd lin = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  lin.topRightCorner(n, n) = m.op().masked;
  lin.bottomLeftCorner(n, n).diagonal() =
      m.activation().derivative(s.y).col(0);
  const LinearMachine jac{lin};

  double worst = 0.0;
  {
    Eigen::VectorXd rhs(2 * n);
    rhs << dir_y0, dir_z0;
    const Eigen::MatrixXd analytic = solve_resolvent(jac, rhs);
    const MachineState plus =
        m.forward(y0 + kFdStep * dir_y0, z0 + kFdStep * dir_z0);
    const MachineState minus =
        m.forward(y0 - kFdStep * dir_y0, z0 - kFdStep * dir_z0);
    Eigen::MatrixXd fd(2 * n, 1);
    fd << (plus.y - minus.y) / (2.0 * kFdStep),
        (plus.z - minus.z) / (2.0 * kFdStep);
    worst = std::max(worst, rel_error(analytic, fd));
  }
  {
    const Eigen::MatrixXd dw = apply_block_mask(dir_p, m.partition());
    Eigen::VectorXd rhs(2 * n);
    rhs << dw * s.z.col(0), Eigen::VectorXd::Zero(n);
    const Eigen::MatrixXd analytic = solve_resolvent(jac, rhs);
    const DenseMachine mp(
        mask_dense(m.op().raw + kFdStep * dir_p, m.partition()),
        m.activation());
    const DenseMachine mm(
        mask_dense(m.op().raw - kFdStep * dir_p, m.partition()),
        m.activation());
    const MachineState plus = mp.forward(y0, z0);
    const MachineState minus = mm.forward(y0, z0);
    Eigen::MatrixXd fd(2 * n, 1);
    fd << (plus.y - minus.y) / (2.0 * kFdStep),
        (plus.z - minus.z) / (2.0 * kFdStep);
    worst = std::max(worst, rel_error(analytic, fd));
  }
  return make_report("thm3_forward_mode", worst, tolerance);
}

double dense_param_gradient_error(const DenseMachine& m,
                                  const Eigen::MatrixXd& y0,
                                  const Eigen::MatrixXd& z0,
                                  const Eigen::MatrixXd& v0,
                                  const Eigen::MatrixXd& u0, double step) {
  const MachineState s = m.forward(y0, z0);
  const DualState d = m.backward(s, v0, u0);
  const Eigen::MatrixXd q = param_gradient(s, d, m.partition());
  Eigen::MatrixXd raw = m.op().raw;
  double worst = 0.0;
  for (Index c = 0; c < raw.cols(); ++c)
    for (Index r = 0; r < raw.rows(); ++r) {
      const double saved = raw(r, c);
      raw(r, c) = saved + step;
      const double lp = pairing_loss(
          DenseMachine(mask_dense(raw, m.partition()), m.activation())
              .forward(y0, z0),
          v0, u0);
      raw(r, c) = saved - step;
      const double lm = pairing_loss(
          DenseMachine(mask_dense(raw, m.partition()), m.activation())
              .forward(y0, z0),
          v0, u0);
      raw(r, c) = saved;
      const double fd = (lp - lm) / (2.0 * step);
      worst = std::max(worst,
                       std::abs(q(r, c) - fd) / std::max(1.0, std::abs(q(r, c))));
    }
  return worst;
}

double dense_input_gradient_error(const DenseMachine& m,
                                  const Eigen::MatrixXd& y0,
                                  const Eigen::MatrixXd& z0,
                                  const Eigen::MatrixXd& v0,
                                  const Eigen::MatrixXd& u0, double step) {
  const MachineState s = m.forward(y0, z0);
  const DualState d = m.backward(s, v0, u0);
  Eigen::MatrixXd ya = y0, za = z0;
  double worst = 0.0;
  for (Index c = 0; c < y0.cols(); ++c)
    for (Index r = 0; r < y0.rows(); ++r) {
      double saved = ya(r, c);
      ya(r, c) = saved + step;
      const double lp = pairing_loss(m.forward(ya, za), v0, u0);
      ya(r, c) = saved - step;
      const double lm = pairing_loss(m.forward(ya, za), v0, u0);
      ya(r, c) = saved;
      double fd = (lp - lm) / (2.0 * step);
      worst = std::max(worst, std::abs(d.v(r, c) - fd) /
                                  std::max(1.0, std::abs(d.v(r, c))));

      saved = za(r, c);
      za(r, c) = saved + step;
      const double lp2 = pairing_loss(m.forward(ya, za), v0, u0);
      za(r, c) = saved - step;
      const double lm2 = pairing_loss(m.forward(ya, za), v0, u0);
      za(r, c) = saved;
      fd = (lp2 - lm2) / (2.0 * step);
      worst = std::max(worst, std::abs(d.u(r, c) - fd) /
                                  std::max(1.0, std::abs(d.u(r, c))));
    }
  return worst;
}

double conv_kernel_gradient_error(const ConvMachine& m,
                                  const Eigen::MatrixXd& y0,
                                  const Eigen::MatrixXd& z0,
                                  const Eigen::MatrixXd& v0,
                                  const Eigen::MatrixXd& u0, double step) {
  const MachineState s = m.forward(y0, z0);
  const DualState d = m.backward(s, v0, u0);
  const ConvKernel q = kernel_gradient(s, d, m);
  ConvKernel kernel = m.kernel();
  double worst = 0.0;
  for (size_t tau = 0; tau < kernel.lags.size(); ++tau)
    for (Index c2 = 0; c2 < kernel.channels(); ++c2)
      for (Index c1 = 0; c1 < kernel.channels(); ++c1) {
        const double saved = kernel.lags[tau](c1, c2);
        kernel.lags[tau](c1, c2) = saved + step;
        const double lp = pairing_loss(
            ConvMachine(kernel, m.grid(), m.activation()).forward(y0, z0), v0,
            u0);
        kernel.lags[tau](c1, c2) = saved - step;
        const double lm = pairing_loss(
            ConvMachine(kernel, m.grid(), m.activation()).forward(y0, z0), v0,
            u0);
        kernel.lags[tau](c1, c2) = saved;
        const double fd = (lp - lm) / (2.0 * step);
        const double analytic = q.lags[tau](c1, c2);
        worst = std::max(worst, std::abs(analytic - fd) /
                                    std::max(1.0, std::abs(analytic)));
      }
  return worst;
}

double conv_input_gradient_error(const ConvMachine& m,
                                 const Eigen::MatrixXd& y0,
                                 const Eigen::MatrixXd& z0,
                                 const Eigen::MatrixXd& v0,
                                 const Eigen::MatrixXd& u0, double step) {
  const MachineState s = m.forward(y0, z0);
  const DualState d = m.backward(s, v0, u0);
  Eigen::MatrixXd ya = y0, za = z0;
  double worst = 0.0;
  for (Index c = 0; c < y0.cols(); ++c)
    for (Index r = 0; r < y0.rows(); ++r) {
      double saved = ya(r, c);
      ya(r, c) = saved + step;
      const double lp = pairing_loss(m.forward(ya, za), v0, u0);
      ya(r, c) = saved - step;
      const double lm = pairing_loss(m.forward(ya, za), v0, u0);
      ya(r, c) = saved;
      double fd = (lp - lm) / (2.0 * step);
      worst = std::max(worst, std::abs(d.v(r, c) - fd) /
                                  std::max(1.0, std::abs(d.v(r, c))));

      saved = za(r, c);
      za(r, c) = saved + step;
      const double lp2 = pairing_loss(m.forward(ya, za), v0, u0);
      za(r, c) = saved - step;
      const double lm2 = pairing_loss(m.forward(ya, za), v0, u0);
      za(r, c) = saved;
      fd = (lp2 - lm2) / (2.0 * step);
      worst = std::max(worst, std::abs(d.u(r, c) - fd) /
                                  std::max(1.0, std::abs(d.u(r, c))));
    }
  return worst;
}

namespace {

CheckReport partition_mask_nilpotent(RandomEngine rng) {
  double err = 0.0;
  // exact integer case
  {
    const Partition p = Partition::contiguous({2, 1, 2});
    const Eigen::MatrixXd w = mask_dense(Eigen::MatrixXd::Ones(5, 5), p).masked;
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(5, 5);
    for (int i = 0; i < p.num_blocks(); ++i) power = power * w;
    err = std::max(err, power.norm());
  }
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = pick(rng, 2, 24);
    const int blocks =
        static_cast<int>(pick(rng, 1, std::min<Index>(6, n)));
    const Eigen::MatrixXd w = random_masked_dense(n, blocks, rng).masked;
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < blocks; ++i) power = power * w;
    err = std::max(err, power.norm());
  }
  return make_report("partition_mask_nilpotent", err, 1e-12, "21 instances");
}

CheckReport partition_cumulative_monotone(RandomEngine rng) {
  int violations = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = pick(rng, 1, 16);
    const int blocks = static_cast<int>(pick(rng, 1, std::min<Index>(5, n)));
    const Partition p = random_partition(n, blocks, rng);
    std::vector<bool> prev = p.cumulative_mask(-1);
    if (std::count(prev.begin(), prev.end(), true) != 0) ++violations;
    for (int i = 0; i < p.num_blocks(); ++i) {
      const std::vector<bool> cur = p.cumulative_mask(i);
      for (Index j = 0; j < n; ++j)
        if (prev[static_cast<size_t>(j)] && !cur[static_cast<size_t>(j)])
          ++violations;  // not monotone
      prev = cur;
    }
    if (std::count(prev.begin(), prev.end(), false) != 0) ++violations;
  }
  return make_report("partition_cumulative_monotone",
                     static_cast<double>(violations), 0.0, "10 instances");
}

CheckReport partition_mask_idempotent(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = pick(rng, 2, 16);
    const int blocks = static_cast<int>(pick(rng, 1, std::min<Index>(5, n)));
    const MaskedDense md = random_masked_dense(n, blocks, rng);
    err = std::max(err,
                   max_abs(mask_dense(md.masked, md.partition).masked -
                           md.masked));
  }
  return make_report("partition_mask_idempotent", err, 0.0, "10 instances");
}

CheckReport linear_neumann_inverse(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 25; ++rep) {
    const Index n = pick(rng, 2, 12);
    const int blocks = static_cast<int>(pick(rng, 1, std::min<Index>(4, n)));
    const LinearMachine m = random_strictly_lower(n, blocks, rng);
    const Eigen::MatrixXd r = neumann_resolvent(m);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    err = std::max(err, max_abs((id - m.F) * r - id));
    err = std::max(err, max_abs(r * (id - m.F) - id));
  }
  return make_report("linear_neumann_inverse", err, 1e-12, "25 instances");
}

CheckReport linear_cofiltration_depth(RandomEngine rng) {
  int violations = 0;
  std::vector<LinearMachine> cases;
  cases.push_back(LinearMachine{Eigen::MatrixXd::Zero(3, 3)});
  {
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(3, 3);
    f(1, 0) = 1.0;
    cases.push_back(LinearMachine{f});
    f(2, 1) = 1.0;
    cases.push_back(LinearMachine{f});
  }
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = pick(rng, 2, 10);
    const int blocks = static_cast<int>(pick(rng, 1, std::min<Index>(4, n)));
    cases.push_back(random_strictly_lower(n, blocks, rng));
  }
  for (const LinearMachine& m : cases) {
    const auto chain = kernel_cofiltration(m);
    const auto d = depth(m);
    if (!d || *d != static_cast<int>(chain.size()) - 2) ++violations;
    // the proper cofiltration starts below the full space
    const std::vector<SubspaceBasis> tail(chain.begin() + 1, chain.end());
    if (!verify_depth_cofiltration(m, tail)) ++violations;
    for (size_t i = 1; i < chain.size(); ++i)
      if (chain[i].cols() >= chain[i - 1].cols()) ++violations;
  }
  return make_report("linear_cofiltration_depth",
                     static_cast<double>(violations), 0.0, "13 instances");
}

CheckReport linear_dual_resolvent(RandomEngine rng) {
  int violations = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = pick(rng, 2, 10);
    const int blocks = static_cast<int>(pick(rng, 1, std::min<Index>(4, n)));
    if (!dual_resolvent_check(random_strictly_lower(n, blocks, rng)))
      ++violations;
  }
  return make_report("linear_dual_resolvent", static_cast<double>(violations),
                     0.0, "10 instances");
}

CheckReport linear_sum_resolvent(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const bool mutual = rep % 2 == 0;
    const Index n = pick(rng, 2, 12);
    const auto [f1, f2] = random_independent_pair(n, rng, mutual);
    const Eigen::MatrixXd factored = sum_resolvent_factored(f1, f2);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd direct =
        solve_resolvent(LinearMachine{f1.F + f2.F}, id);
    err = std::max(err, max_abs(factored - direct));
    if (mutual) {
      const Eigen::MatrixXd split =
          neumann_resolvent(f1) + neumann_resolvent(f2) - id;
      err = std::max(err, max_abs(factored - split));
    }
  }
  return make_report("linear_sum_resolvent", err, 1e-10, "30 instances");
}

CheckReport linear_sum_depth_bounds(RandomEngine rng) {
  int violations = 0;
  for (int rep = 0; rep < 30; ++rep) {
    const bool mutual = rep % 2 == 0;
    const Index n = pick(rng, 2, 12);
    const auto [f1, f2] = random_independent_pair(n, rng, mutual);
    const auto d1 = depth(f1);
    const auto d2 = depth(f2);
    const auto d = depth(LinearMachine{f1.F + f2.F});
    if (!d1 || !d2 || !d) {
      ++violations;
      continue;
    }
    if (*d > *d1 + *d2) ++violations;
    if (mutual && *d > std::max(*d1, *d2)) ++violations;
  }
  return make_report("linear_sum_depth_bounds",
                     static_cast<double>(violations), 0.0, "30 instances");
}

CheckReport linear_nilpotent_sum(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = pick(rng, 2, 12);
    const auto [f1, f2] = random_independent_pair(n, rng, false);
    const auto n1 = nilpotency_index(f1);
    const auto n2 = nilpotency_index(f2);
    if (!n1 || !n2) continue;
    const Eigen::MatrixXd sum = f1.F + f2.F;
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < *n1 + *n2 - 1; ++i) power = power * sum;
    err = std::max(err, max_abs(power));
  }
  return make_report("linear_nilpotent_sum", err, 1e-12, "20 instances");
}

CheckReport dense_residual(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Activation& act =
        rep % 2 == 0 ? Activation::tanh() : Activation::identity();
    const Index n = pick(rng, 2, 64);
    const int blocks = static_cast<int>(pick(rng, 1, std::min<Index>(8, n)));
    const DenseMachine m = random_dense_machine(n, blocks, act, rng);
    const Index batch = pick(rng, 1, 3);
    const Eigen::MatrixXd y0 = random_matrix(n, batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(n, batch, rng);
    err = std::max(err, machine_residual(m, m.forward(y0, z0), y0, z0));
  }
  return make_report("dense_residual", err, 1e-8, "100 instances");
}

CheckReport dense_linear_oracle(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const DenseMachine m = pick_dense(rng, 20, 6, Activation::identity());
    const Index n = m.size();
    const Index batch = pick(rng, 1, 2);
    const Eigen::MatrixXd y0 = random_matrix(n, batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(n, batch, rng);
    const MachineState s = m.forward(y0, z0);
    Eigen::MatrixXd lin = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    lin.topRightCorner(n, n) = m.op().masked;
    lin.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd rhs(2 * n, batch);
    rhs << y0, z0;
    const Eigen::MatrixXd sol = solve_resolvent(LinearMachine{lin}, rhs);
    err = std::max(err, max_abs(sol.topRows(n) - s.y));
    err = std::max(err, max_abs(sol.bottomRows(n) - s.z));
  }
  return make_report("dense_linear_oracle", err, 1e-10, "20 instances");
}

CheckReport dense_solver_equivalence(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Activation& act =
        rep % 2 == 0 ? Activation::tanh() : Activation::identity();
    const DenseMachine m = pick_dense(rng, 24, 8, act);
    const Index batch = pick(rng, 1, 2);
    const Eigen::MatrixXd y0 = random_matrix(m.size(), batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(m.size(), batch, rng);
    const MachineState fast = m.forward(y0, z0);
    const MachineState naive =
        m.forward_naive(y0, z0, 2 * m.num_blocks() + 1);
    err = std::max(err, max_abs(fast.y - naive.y));
    err = std::max(err, max_abs(fast.z - naive.z));
  }
  return make_report("dense_solver_equivalence", err, 1e-10, "20 instances");
}

CheckReport dense_depth_bound(RandomEngine rng) {
  double err = 0.0;
  // singleton 3-block example and the single-block edge case
  {
    const Partition p = Partition::singletons(3);
    const DenseMachine m(mask_dense(Eigen::MatrixXd::Ones(3, 3), p),
                         Activation::identity());
    Eigen::MatrixXd y0(3, 1), z0 = Eigen::MatrixXd::Zero(3, 1);
    y0 << 1, 0, 0;
    err = std::max(err, check_depth_bound(m, y0, z0).max_abs_error);
    // negative control: one sweep must not reach the fixed point
    const MachineState one = m.forward_naive(y0, z0, 1);
    const MachineState full = m.forward(y0, z0);
    if (max_abs(one.y - full.y) <= 1e-10) err = std::max(err, 1.0);
  }
  {
    const Partition p = Partition::contiguous({4});
    const DenseMachine m(mask_dense(random_matrix(4, 4, rng), p),
                         Activation::tanh());
    const Eigen::MatrixXd y0 = random_matrix(4, 2, rng);
    const Eigen::MatrixXd z0 = random_matrix(4, 2, rng);
    err = std::max(err, check_depth_bound(m, y0, z0).max_abs_error);
  }
  for (int rep = 0; rep < 15; ++rep) {
    const Activation& act =
        rep % 2 == 0 ? Activation::tanh() : Activation::identity();
    const DenseMachine m = pick_dense(rng, 20, 6, act);
    const Index batch = pick(rng, 1, 2);
    const Eigen::MatrixXd y0 = random_matrix(m.size(), batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(m.size(), batch, rng);
    err = std::max(err, check_depth_bound(m, y0, z0).max_abs_error);
  }
  return make_report("dense_depth_bound", err, 1e-10, "17 instances");
}

CheckReport dense_gradient_check(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 8; ++rep) {
    const Activation& act = rep < 6 ? Activation::tanh()
                            : rep == 6 ? Activation::identity()
                                       : Activation::relu();
    const Index n = pick(rng, 4, 10);
    const int blocks = static_cast<int>(pick(rng, 1, 4));
    const Index batch = pick(rng, 1, 2);
    DenseMachine m = random_dense_machine(n, blocks, act, rng);
    Eigen::MatrixXd y0 = random_matrix(n, batch, rng);
    Eigen::MatrixXd z0 = random_matrix(n, batch, rng);
    if (act.kind() == Activation::Kind::Relu) {
      // keep every pre-activation away from the kink
      for (int tries = 0; tries < 50; ++tries) {
        if (m.forward(y0, z0).y.cwiseAbs().minCoeff() > 1e-3) break;
        y0 = random_matrix(n, batch, rng);
        z0 = random_matrix(n, batch, rng);
      }
      if (m.forward(y0, z0).y.cwiseAbs().minCoeff() <= 1e-3) continue;
    }
    const Eigen::MatrixXd v0 = random_matrix(n, batch, rng);
    const Eigen::MatrixXd u0 = random_matrix(n, batch, rng);
    err = std::max(err,
                   dense_param_gradient_error(m, y0, z0, v0, u0, kFdStep));
    err = std::max(err,
                   dense_input_gradient_error(m, y0, z0, v0, u0, kFdStep));
  }
  return make_report("dense_gradient_check", err, 1e-5, "8 instances");
}

CheckReport dense_backward_linearity(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const DenseMachine m = pick_dense(rng, 16, 5, Activation::tanh());
    const Index n = m.size();
    const Index batch = pick(rng, 1, 2);
    const Eigen::MatrixXd y0 = random_matrix(n, batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(n, batch, rng);
    const MachineState s = m.forward(y0, z0);
    const Eigen::MatrixXd va = random_matrix(n, batch, rng);
    const Eigen::MatrixXd ua = random_matrix(n, batch, rng);
    const Eigen::MatrixXd vb = random_matrix(n, batch, rng);
    const Eigen::MatrixXd ub = random_matrix(n, batch, rng);
    const double a = 2.5;
    const DualState da = m.backward(s, va, ua);
    const DualState db = m.backward(s, vb, ub);
    const DualState dc = m.backward(s, a * va + vb, a * ua + ub);
    err = std::max(err, max_abs(dc.v - a * da.v - db.v));
    err = std::max(err, max_abs(dc.u - a * da.u - db.u));
  }
  return make_report("dense_backward_linearity", err, 1e-12, "10 instances");
}

CheckReport conv_adjointness(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Index n_t = pick(rng, 3, 8);
    const Index n_c = pick(rng, 1, 4);
    const Index k = pick(rng, 1, std::min<Index>(3, n_t));
    const ConvKernel kernel = random_kernel(k, n_c, n_t, rng);
    const Eigen::MatrixXd z = random_matrix(n_t, n_c, rng);
    const Eigen::MatrixXd v = random_matrix(n_t, n_c, rng);
    const double a = conv_forward_op(kernel, z).cwiseProduct(v).sum();
    const double b = z.cwiseProduct(conv_transpose_op(kernel, v)).sum();
    err = std::max(err, std::abs(a - b) / std::max(1.0, std::abs(a)));
  }
  return make_report("conv_adjointness", err, 1e-12, "100 instances");
}

CheckReport conv_shift_equivariance(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Index n_t = pick(rng, 3, 8);
    const Index n_c = pick(rng, 1, 4);
    const Index k = pick(rng, 1, std::min<Index>(3, n_t));
    const ConvKernel kernel = random_kernel(k, n_c, n_t, rng);
    const Eigen::MatrixXd z = random_matrix(n_t, n_c, rng);
    Eigen::MatrixXd shifted = Eigen::MatrixXd::Zero(n_t, n_c);
    shifted.bottomRows(n_t - 1) = z.topRows(n_t - 1);
    const Eigen::MatrixXd y = conv_forward_op(kernel, z);
    Eigen::MatrixXd y_shifted = Eigen::MatrixXd::Zero(n_t, n_c);
    y_shifted.bottomRows(n_t - 1) = y.topRows(n_t - 1);
    err = std::max(err, max_abs(conv_forward_op(kernel, shifted) - y_shifted));
  }
  return make_report("conv_shift_equivariance", err, 1e-12, "20 instances");
}

CheckReport conv_dense_consistency(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const Activation& act =
        rep % 2 == 0 ? Activation::tanh() : Activation::identity();
    const Index n_t = pick(rng, 2, 4);
    const Index n_c = pick(rng, 2, 4);
    const ConvKernel kernel = random_kernel(1, n_c, n_t, rng);
    std::vector<IndexList> groups;
    for (Index c = 0; c < n_c; ++c) groups.push_back({c});
    const ConvMachine cm(kernel, GridPartition::conv_style(n_t, groups), act);
    const DenseMachine dm(
        mask_dense(kernel.lags[0].transpose(), Partition::singletons(n_c)),
        act);
    const Index batch = pick(rng, 1, 2);
    const Eigen::MatrixXd y0 = random_matrix(n_t * n_c, batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(n_t * n_c, batch, rng);
    const MachineState cs = cm.forward(y0, z0);
    for (Index t = 0; t < n_t; ++t) {
      const MachineState ds = dm.forward(y0.middleRows(t * n_c, n_c),
                                         z0.middleRows(t * n_c, n_c));
      err = std::max(err, max_abs(cs.y.middleRows(t * n_c, n_c) - ds.y));
      err = std::max(err, max_abs(cs.z.middleRows(t * n_c, n_c) - ds.z));
    }
  }
  return make_report("conv_dense_consistency", err, 1e-12, "10 instances");
}

CheckReport conv_residual(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 40; ++rep) {
    const Activation& act =
        rep % 2 == 0 ? Activation::tanh() : Activation::identity();
    const GridTag style =
        rep % 4 < 2 ? GridTag::ConvStyle : GridTag::RecurrentStyle;
    const ConvMachine m = pick_conv(rng, style, act);
    const Index batch = pick(rng, 1, 3);
    const Eigen::MatrixXd y0 = random_matrix(m.size(), batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(m.size(), batch, rng);
    err = std::max(err, machine_residual(m, m.forward(y0, z0), y0, z0));
  }
  return make_report("conv_residual", err, 1e-8, "40 instances");
}

CheckReport conv_fast_agreement(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Activation& act =
        rep % 2 == 0 ? Activation::tanh() : Activation::identity();
    ConvMachine m = [&] {
      if (rep % 5 == 4) {
        // custom grid partition: arbitrary blocks over the flat grid
        const Index n_t = pick(rng, 2, 5);
        const Index n_c = pick(rng, 2, 4);
        const Index k = pick(rng, 1, std::min<Index>(3, n_t));
        const int blocks =
            static_cast<int>(pick(rng, 1, std::min<Index>(5, n_t * n_c)));
        return ConvMachine(
            random_kernel(k, n_c, n_t, rng),
            GridPartition::custom(n_t, n_c,
                                  random_partition(n_t * n_c, blocks, rng)),
            act);
      }
      const GridTag style =
          rep % 2 == 0 ? GridTag::ConvStyle : GridTag::RecurrentStyle;
      return pick_conv(rng, style, act);
    }();
    const Index batch = pick(rng, 1, 2);
    const Eigen::MatrixXd y0 = random_matrix(m.size(), batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(m.size(), batch, rng);
    const MachineState ref = m.forward(y0, z0);
    const MachineState fast = m.forward_fast(y0, z0);
    err = std::max(err, max_abs(ref.y - fast.y));
    err = std::max(err, max_abs(ref.z - fast.z));
    const Eigen::MatrixXd v0 = random_matrix(m.size(), batch, rng);
    const Eigen::MatrixXd u0 = random_matrix(m.size(), batch, rng);
    const DualState dref = m.backward(ref, v0, u0);
    const DualState dfast = m.backward_fast(ref, v0, u0);
    err = std::max(err, max_abs(dref.v - dfast.v));
    err = std::max(err, max_abs(dref.u - dfast.u));
  }
  return make_report("conv_fast_agreement", err, 1e-10, "20 instances");
}

CheckReport conv_rnn_equivalence(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 12; ++rep) {
    const Activation& act = rep % 3 == 0   ? Activation::identity()
                            : rep % 3 == 1 ? Activation::tanh()
                                           : Activation::relu();
    const ConvMachine m = pick_conv(rng, GridTag::RecurrentStyle, act);
    const Index batch = pick(rng, 1, 2);
    const Eigen::MatrixXd y0 = random_matrix(m.size(), batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(m.size(), batch, rng);
    const MachineState a = m.forward(y0, z0);
    const MachineState b = rnn_oracle(m, y0, z0);
    err = std::max(err, max_abs(a.y - b.y));
    err = std::max(err, max_abs(a.z - b.z));
  }
  return make_report("conv_rnn_equivalence", err, 1e-10, "12 instances");
}

CheckReport conv_gradient_check(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 6; ++rep) {
    const GridTag style =
        rep % 2 == 0 ? GridTag::ConvStyle : GridTag::RecurrentStyle;
    const ConvMachine m = pick_conv(rng, style, Activation::tanh(), 4, 3);
    const Index batch = pick(rng, 1, 2);
    const Eigen::MatrixXd y0 = random_matrix(m.size(), batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(m.size(), batch, rng);
    const Eigen::MatrixXd v0 = random_matrix(m.size(), batch, rng);
    const Eigen::MatrixXd u0 = random_matrix(m.size(), batch, rng);
    err = std::max(err,
                   conv_kernel_gradient_error(m, y0, z0, v0, u0, kFdStep));
    err = std::max(err,
                   conv_input_gradient_error(m, y0, z0, v0, u0, kFdStep));
  }
  return make_report("conv_gradient_check", err, 1e-5, "6 instances");
}

CheckReport thm3_identity(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const DenseMachine m = pick_dense(rng, 10, 4, Activation::identity());
    const Index n = m.size();
    const CheckReport r = check_thm3_forward_mode(
        m, random_matrix(n, 1, rng), random_matrix(n, 1, rng),
        random_matrix(n, n, rng), random_matrix(n, 1, rng),
        random_matrix(n, 1, rng), 1e-10);
    err = std::max(err, r.max_abs_error);
  }
  return make_report("thm3_identity", err, 1e-10, "5 instances");
}

CheckReport thm3_tanh(RandomEngine rng) {
  double err = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const DenseMachine m = pick_dense(rng, 10, 4, Activation::tanh());
    const Index n = m.size();
    const CheckReport r = check_thm3_forward_mode(
        m, random_matrix(n, 1, rng), random_matrix(n, 1, rng),
        random_matrix(n, n, rng), random_matrix(n, 1, rng),
        random_matrix(n, 1, rng), 1e-5);
    err = std::max(err, r.max_abs_error);
  }
  return make_report("thm3_tanh", err, 1e-5, "5 instances");
}

CheckReport finite_diff_sanity(RandomEngine rng) {
  double err = 0.0;
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
  const double fd = finite_diff_directional(
      [](const Eigen::VectorXd& x) { return x.squaredNorm(); }, e1, e1, 1e-5);
  err = std::max(err, std::abs(fd - 2.0));
  const double zero = finite_diff_directional(
      [](const Eigen::VectorXd&) { return 3.25; },
      random_matrix(4, 1, rng).col(0), random_matrix(4, 1, rng).col(0), 1e-5);
  err = std::max(err, std::abs(zero));
  return make_report("finite_diff_sanity", err, 1e-8);
}

CheckReport bench_roundtrip(RandomEngine rng) {
  int violations = 0;
  BenchConfig config;
  config.seed = rng();
  BenchRowConfig dense_row;
  dense_row.machine_kind = "dense";
  dense_row.block_size = 2;
  dense_row.num_blocks = 2;
  dense_row.batch = 2;
  dense_row.repetitions = 2;
  config.rows.push_back(dense_row);
  BenchRowConfig conv_row;
  conv_row.machine_kind = "conv";
  conv_row.block_size = 1;
  conv_row.num_blocks = 2;
  conv_row.batch = 1;
  conv_row.n_t = 4;
  conv_row.kernel_lags = 2;
  conv_row.repetitions = 2;
  config.rows.push_back(conv_row);
  conv_row.machine_kind = "recurrent";
  config.rows.push_back(conv_row);

  const std::vector<BenchRow> rows = run_bench(config);
  if (rows.size() != config.rows.size()) ++violations;
  for (const BenchRow& r : rows) {
    if (!(r.forward_s > 0.0) || !std::isfinite(r.forward_s)) ++violations;
    if (!(r.backward_s > 0.0) || !std::isfinite(r.backward_s)) ++violations;
    if (!(r.ratio > 0.0) || !std::isfinite(r.ratio)) ++violations;
    if (r.ratio != r.backward_s / r.forward_s) ++violations;
  }
  const std::string csv = bench_csv(rows);
  try {
    if (bench_csv(parse_bench_csv(csv)) != csv) ++violations;
  } catch (const Error&) {
    ++violations;
  }
  return make_report("bench_roundtrip", static_cast<double>(violations), 0.0,
                     "3 tiny rows");
}

CheckReport demo_closed_form(RandomEngine rng) {
  double err = 0.0;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
  Eigen::VectorXd ramp(8);
  ramp << 1, 2, 3, 4, 5, 6, 7, 8;
  for (const Eigen::VectorXd& x : {ones, ramp}) {
    err = std::max(err, max_abs(shortcut_demo_machine_eval(1.0, x) -
                                shortcut_demo_closed_form(1.0, x)));
    err = std::max(err, max_abs(shortcut_demo_machine_eval(0.0, x) - x));
  }
  // expected values of the unit-map network on the all-ones input
  Eigen::VectorXd expected(8);
  expected << 1, 1, 3, 4, 6, 5, 5, 6;
  err = std::max(err, max_abs(shortcut_demo_machine_eval(1.0, ones) - expected));
  // the summed operator has depth 4, so 5 naive sweeps reach the fixed point
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(8, 8);
  for (const Eigen::MatrixXd& f : shortcut_demo_operators(1.0)) total += f;
  Eigen::VectorXd x(8);
  for (Index i = 0; i < 8; ++i)
    x(i) = static_cast<double>(static_cast<int>(rng() % 7)) - 3.0;
  Eigen::VectorXd h = x;
  for (int i = 0; i < 5; ++i) h = x + total * h;
  err = std::max(err, max_abs(h - shortcut_demo_machine_eval(1.0, x)));
  return make_report("demo_closed_form", err, 0.0);
}

CheckReport train_loss_behavior(RandomEngine rng) {
  int violations = 0;
  const std::uint64_t seed = rng();
  const std::vector<double> trace = train_toy_regression(30, 0.1, seed);
  if (trace.size() != 31) ++violations;
  for (double loss : trace)
    if (!std::isfinite(loss)) ++violations;
  const std::vector<double> frozen = train_toy_regression(30, 0.0, seed);
  for (double loss : frozen)
    if (loss != frozen.front()) ++violations;
  if (train_toy_regression(1, 0.1, seed).size() != 2) ++violations;
  return make_report("train_loss_behavior", static_cast<double>(violations),
                     0.0, "30 steps");
}

CheckReport injected_fault(RandomEngine rng) {
  // deliberately corrupted state: the residual check must fail
  const DenseMachine m = pick_dense(rng, 10, 3, Activation::tanh());
  const Eigen::MatrixXd y0 = random_matrix(m.size(), 1, rng);
  const Eigen::MatrixXd z0 = random_matrix(m.size(), 1, rng);
  MachineState s = m.forward(y0, z0);
  s.z.array() += 1e-3;
  return make_report("injected_fault", machine_residual(m, s, y0, z0), 1e-8,
                     "z perturbed by 1e-3");
}

}  // namespace

std::vector<CheckReport> run_all_checks(const SuiteOptions& options) {
  std::vector<CheckReport> reports;
  int idx = 0;
  auto stream = [&] {
    return RandomEngine(options.seed ^
                        (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(++idx)));
  };
  reports.push_back(partition_mask_nilpotent(stream()));
  reports.push_back(partition_cumulative_monotone(stream()));
  reports.push_back(partition_mask_idempotent(stream()));
  reports.push_back(linear_neumann_inverse(stream()));
  reports.push_back(linear_cofiltration_depth(stream()));
  reports.push_back(linear_dual_resolvent(stream()));
  reports.push_back(linear_sum_resolvent(stream()));
  reports.push_back(linear_sum_depth_bounds(stream()));
  reports.push_back(linear_nilpotent_sum(stream()));
  reports.push_back(dense_residual(stream()));
  reports.push_back(dense_linear_oracle(stream()));
  reports.push_back(dense_solver_equivalence(stream()));
  reports.push_back(dense_depth_bound(stream()));
  reports.push_back(dense_gradient_check(stream()));
  reports.push_back(dense_backward_linearity(stream()));
  reports.push_back(conv_adjointness(stream()));
  reports.push_back(conv_shift_equivariance(stream()));
  reports.push_back(conv_dense_consistency(stream()));
  reports.push_back(conv_residual(stream()));
  reports.push_back(conv_fast_agreement(stream()));
  reports.push_back(conv_rnn_equivalence(stream()));
  reports.push_back(conv_gradient_check(stream()));
  reports.push_back(thm3_identity(stream()));
  reports.push_back(thm3_tanh(stream()));
  reports.push_back(finite_diff_sanity(stream()));
  reports.push_back(bench_roundtrip(stream()));
  reports.push_back(demo_closed_form(stream()));
  reports.push_back(train_loss_behavior(stream()));
  if (options.inject_fault) reports.push_back(injected_fault(stream()));
  return reports;
}

bool all_passed(const std::vector<CheckReport>& reports) {
  for (const CheckReport& r : reports)
    if (!r.passed) return false;
  return true;
}

std::string reports_to_csv(const std::vector<CheckReport>& reports) {
  std::string out = "name,passed,max_abs_error,tolerance\n";
  char buf[256];
  for (const CheckReport& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g\n", r.name.c_str(),
                  r.passed ? "true" : "false", r.max_abs_error, r.tolerance);
    out += buf;
  }
  return out;
}

}  // namespace machines
