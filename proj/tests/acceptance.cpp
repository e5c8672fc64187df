// End-to-end acceptance run: nine criteria, one PASS/FAIL line each,
// nonzero exit if any line fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "machines/bench.hpp"
#include "machines/demo.hpp"
#include "machines/generate.hpp"
#include "machines/linear.hpp"
#include "machines/train.hpp"
#include "machines/verify.hpp"

using namespace machines;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

struct Criterion {
  std::string name;
  bool passed;
  double max_err;
  double tol;
  double seconds;
  std::string note;
};

int failures = 0;

void report(const Criterion& c) {
  std::printf("%s  %-38s max_err=%-12.3e tol=%-8.1e %6.2fs  %s\n",
              c.passed ? "PASS" : "FAIL", c.name.c_str(), c.max_err, c.tol,
              c.seconds, c.note.c_str());
  std::fflush(stdout);
  if (!c.passed) ++failures;
}

Index pick(RandomEngine& rng, Index lo, Index hi) {
  return lo + static_cast<Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// 1: series resolvent vs direct dense inverse, 200 instances, < 5 s
void criterion_resolvent_oracle() {
  const double start = now_s();
  RandomEngine rng(101);
  double err = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = pick(rng, 2, 12);
    const int blocks = static_cast<int>(pick(rng, 1, std::min<Index>(5, n)));
    const LinearMachine m = random_strictly_lower(n, blocks, rng);
    const Eigen::MatrixXd direct =
        (Eigen::MatrixXd::Identity(n, n) - m.F).inverse();
    err = std::max(err, max_abs(neumann_resolvent(m) - direct));
  }
  const double secs = now_s() - start;
  report({"1 resolvent vs dense inverse", err <= 1e-10 && secs < 5.0, err,
          1e-10, secs, "200 instances"});
}

// 2: sum of independent machines: factored resolvent + depth bounds
void criterion_sum_of_machines() {
  const double start = now_s();
  RandomEngine rng(102);
  double err = 0.0;
  int bound_violations = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const bool mutual = rep % 2 == 0;
    const Index n = pick(rng, 2, 12);
    const auto [f1, f2] = random_independent_pair(n, rng, mutual);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd product =
        neumann_resolvent(f2) * neumann_resolvent(f1);
    const Eigen::MatrixXd direct = (id - f1.F - f2.F).inverse();
    err = std::max(err, max_abs(product - direct));
    err = std::max(err, max_abs(sum_resolvent_factored(f1, f2) - direct));
    if (mutual) {
      const Eigen::MatrixXd split =
          neumann_resolvent(f1) + neumann_resolvent(f2) - id;
      err = std::max(err, max_abs(product - split));
    }
    const auto d1 = depth(f1), d2 = depth(f2);
    const auto d = depth(LinearMachine{f1.F + f2.F});
    if (!d1 || !d2 || !d || *d > *d1 + *d2) ++bound_violations;
    else if (mutual && *d > std::max(*d1, *d2)) ++bound_violations;
  }
  const double secs = now_s() - start;
  char note[64];
  std::snprintf(note, sizeof note, "200 pairs, %d bound violations",
                bound_violations);
  report({"2 sum-of-machines resolvent", err <= 1e-10 && bound_violations == 0,
          err, 1e-10, secs, note});
}

// 3: forward outputs satisfy both sub-equations, 100 dense + 100 conv
void criterion_residuals() {
  const double start = now_s();
  RandomEngine rng(103);
  double err = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Activation& act =
        rep % 2 == 0 ? Activation::tanh() : Activation::identity();
    const Index n = pick(rng, 2, 48);
    const int blocks = static_cast<int>(pick(rng, 1, std::min<Index>(8, n)));
    const DenseMachine m = random_dense_machine(n, blocks, act, rng);
    const Index batch = pick(rng, 1, 3);
    const Eigen::MatrixXd y0 = random_matrix(n, batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(n, batch, rng);
    err = std::max(err, machine_residual(m, m.forward(y0, z0), y0, z0));
  }
  for (int rep = 0; rep < 100; ++rep) {
    const Activation& act =
        rep % 2 == 0 ? Activation::tanh() : Activation::identity();
    const GridTag style =
        rep % 4 < 2 ? GridTag::ConvStyle : GridTag::RecurrentStyle;
    const Index n_t = pick(rng, 2, 8);
    const Index n_c = pick(rng, 2, 6);
    const int groups = static_cast<int>(pick(rng, 1, std::min<Index>(3, n_c)));
    const Index k = pick(rng, 1, std::min<Index>(3, n_t));
    const ConvMachine m =
        random_conv_machine(n_t, n_c, groups, k, style, act, rng);
    const Index batch = pick(rng, 1, 3);
    const Eigen::MatrixXd y0 = random_matrix(m.size(), batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(m.size(), batch, rng);
    err = std::max(err, machine_residual(m, m.forward(y0, z0), y0, z0));
  }
  const double secs = now_s() - start;
  report({"3 machine-equation residuals", err <= 1e-8, err, 1e-8, secs,
          "100 dense + 100 conv"});
}

// 4: naive iteration reaches the blockwise fixed point within 2n+1 sweeps
void criterion_depth_bound() {
  const double start = now_s();
  RandomEngine rng(104);
  double err = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Activation& act =
        rep % 2 == 0 ? Activation::tanh() : Activation::identity();
    const Index n = pick(rng, 2, 32);
    const int blocks = static_cast<int>(pick(rng, 1, std::min<Index>(8, n)));
    const DenseMachine m = random_dense_machine(n, blocks, act, rng);
    const Index batch = pick(rng, 1, 2);
    const Eigen::MatrixXd y0 = random_matrix(n, batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(n, batch, rng);
    const MachineState direct = m.forward(y0, z0);
    const MachineState naive =
        m.forward_naive(y0, z0, 2 * m.num_blocks() + 1);
    err = std::max(err, max_abs(direct.y - naive.y));
    err = std::max(err, max_abs(direct.z - naive.z));
  }
  const double secs = now_s() - start;
  report({"4 depth-bound convergence", err <= 1e-10, err, 1e-10, secs,
          "100 instances, 2n+1 sweeps"});
}

// 5: analytic gradients vs central differences, tanh, < 60 s
void criterion_gradients() {
  const double start = now_s();
  RandomEngine rng(105);
  double err = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Index n = pick(rng, 3, 10);
    const int blocks = static_cast<int>(pick(rng, 1, std::min<Index>(4, n)));
    const DenseMachine m =
        random_dense_machine(n, blocks, Activation::tanh(), rng);
    const Index batch = pick(rng, 1, 2);
    const Eigen::MatrixXd y0 = random_matrix(n, batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(n, batch, rng);
    const Eigen::MatrixXd v0 = random_matrix(n, batch, rng);
    const Eigen::MatrixXd u0 = random_matrix(n, batch, rng);
    err = std::max(err, dense_param_gradient_error(m, y0, z0, v0, u0, kFdStep));
  }
  for (const GridTag style : {GridTag::ConvStyle, GridTag::RecurrentStyle}) {
    for (int rep = 0; rep < 50; ++rep) {
      const Index n_t = pick(rng, 2, 4);
      const Index n_c = pick(rng, 2, 3);
      const int groups = static_cast<int>(pick(rng, 1, n_c));
      const Index k = pick(rng, 1, std::min<Index>(2, n_t));
      const ConvMachine m = random_conv_machine(n_t, n_c, groups, k, style,
                                                Activation::tanh(), rng);
      const Index batch = pick(rng, 1, 2);
      const Eigen::MatrixXd y0 = random_matrix(m.size(), batch, rng);
      const Eigen::MatrixXd z0 = random_matrix(m.size(), batch, rng);
      const Eigen::MatrixXd v0 = random_matrix(m.size(), batch, rng);
      const Eigen::MatrixXd u0 = random_matrix(m.size(), batch, rng);
      err = std::max(err,
                     conv_kernel_gradient_error(m, y0, z0, v0, u0, kFdStep));
    }
  }
  const double secs = now_s() - start;
  report({"5 gradient fidelity", err <= 1e-5 && secs < 60.0, err, 1e-5, secs,
          "50 dense + 50 conv + 50 recurrent"});
}

// 6: recurrent-partition machine vs explicit time-loop oracle
void criterion_rnn_equivalence() {
  const double start = now_s();
  RandomEngine rng(106);
  double err = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Activation& act = rep % 3 == 0   ? Activation::identity()
                            : rep % 3 == 1 ? Activation::tanh()
                                           : Activation::relu();
    const Index n_t = pick(rng, 2, 6);
    const Index n_c = pick(rng, 2, 5);
    const int groups = static_cast<int>(pick(rng, 1, std::min<Index>(3, n_c)));
    const Index k = pick(rng, 1, std::min<Index>(3, n_t));
    const ConvMachine m = random_conv_machine(n_t, n_c, groups, k,
                                              GridTag::RecurrentStyle, act, rng);
    const Index batch = pick(rng, 1, 2);
    const Eigen::MatrixXd y0 = random_matrix(m.size(), batch, rng);
    const Eigen::MatrixXd z0 = random_matrix(m.size(), batch, rng);
    const MachineState a = m.forward(y0, z0);
    const MachineState b = rnn_oracle(m, y0, z0);
    err = std::max(err, max_abs(a.y - b.y));
    err = std::max(err, max_abs(a.z - b.z));
  }
  const double secs = now_s() - start;
  report({"6 recurrent vs time-loop oracle", err <= 1e-10, err, 1e-10, secs,
          "50 instances"});
}

// 7: worked shortcut-network example, exact integer agreement
void criterion_demo() {
  const double start = now_s();
  double err = 0.0;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
  Eigen::VectorXd ramp(8);
  ramp << 1, 2, 3, 4, 5, 6, 7, 8;
  Eigen::VectorXd mixed(8);
  mixed << 2, -1, 3, 0, 1, -2, 4, 5;
  for (const double w : {1.0, 2.0}) {
    for (const Eigen::VectorXd& x : {ones, ramp, mixed}) {
      err = std::max(err, max_abs(shortcut_demo_machine_eval(w, x) -
                                  shortcut_demo_closed_form(w, x)));
    }
  }
  Eigen::VectorXd expected(8);
  expected << 1, 1, 3, 4, 6, 5, 5, 6;
  err = std::max(err, max_abs(shortcut_demo_machine_eval(1.0, ones) - expected));
  const bool trace_ok = shortcut_demo_trace().find(
                            "matches closed form: yes") != std::string::npos;
  const double secs = now_s() - start;
  report({"7 worked example exactness", err == 0.0 && trace_ok, err, 0.0, secs,
          trace_ok ? "trace consistent" : "trace mismatch"});
}

// 8: backward/forward minimum-time ratios at both table sizes, < 5 min
void criterion_bench_ratio() {
  const double start = now_s();
  const std::vector<BenchRow> rows = run_bench(default_bench_config());
  double worst = 1.0;
  std::string note;
  for (const BenchRow& r : rows) {
    if (std::abs(std::log(r.ratio)) > std::abs(std::log(worst))) worst = r.ratio;
    char item[64];
    std::snprintf(item, sizeof item, "%s/%s=%.2f ", r.machine_kind.c_str(),
                  r.size_label.c_str(), r.ratio);
    note += item;
  }
  bool in_band = true;
  for (const BenchRow& r : rows)
    if (!(r.ratio >= 0.5 && r.ratio <= 2.0)) in_band = false;
  const double secs = now_s() - start;
  report({"8 benchmark ratio band", in_band && secs < 300.0, worst, 2.0, secs,
          note});
}

// 9: trainer reaches < 10% of the initial loss, deterministically
void criterion_trainer() {
  const double start = now_s();
  const std::vector<double> trace = train_toy_regression(200, 0.1, 2024);
  const std::vector<double> again = train_toy_regression(200, 0.1, 2024);
  const bool deterministic = trace == again;
  const double rel = trace.back() / trace.front();
  const double secs = now_s() - start;
  char note[96];
  std::snprintf(note, sizeof note, "loss %.3e -> %.3e%s", trace.front(),
                trace.back(), deterministic ? "" : ", NONDETERMINISTIC");
  report({"9 trainer convergence", rel < 0.1 && deterministic, rel, 0.1, secs,
          note});
}

}  // namespace

int main() {
  criterion_resolvent_oracle();
  criterion_sum_of_machines();
  criterion_residuals();
  criterion_depth_bound();
  criterion_gradients();
  criterion_rnn_equivalence();
  criterion_demo();
  criterion_bench_ratio();
  criterion_trainer();
  if (failures == 0) {
    std::printf("all 9 acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", failures);
  return 1;
}
