#include "machines/train.hpp"

#include <cmath>
#include <cstdio>

#include "machines/activation.hpp"
#include "machines/dense.hpp"
#include "machines/errors.hpp"
#include "machines/generate.hpp"

namespace machines {

std::vector<double> train_toy_regression(int steps, double lr,
                                         std::uint64_t seed) {
  if (steps < 1) throw Error("steps must be >= 1");
  if (lr < 0.0) throw Error("learning rate must be >= 0");

  const Index n = 12;
  const int batch = 16;
  RandomEngine rng(seed);
  const Partition p = Partition::contiguous({4, 4, 4});
  const Activation& act = Activation::tanh();

  // hidden teacher: random masked operator, larger entries than the test
  // instances so the student actually has something to learn, but small
  // enough to keep tanh away from saturation
  const Eigen::MatrixXd teacher_raw =
      random_matrix(n, n, rng, 4.0 / static_cast<double>(n));
  const DenseMachine teacher(mask_dense(teacher_raw, p), act);
  const Eigen::MatrixXd y0 = random_matrix(n, batch, rng);
  const Eigen::MatrixXd z0 = random_matrix(n, batch, rng);
  const Eigen::MatrixXd target = teacher.forward(y0, z0).z;
  const Eigen::MatrixXd v0 = Eigen::MatrixXd::Zero(n, batch);

  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> losses;
  losses.reserve(static_cast<size_t>(steps) + 1);
  for (int step = 0; step <= steps; ++step) {
    const DenseMachine student(mask_dense(raw, p), act);
    const MachineState s = student.forward(y0, z0);
    const Eigen::MatrixXd residual = s.z - target;
    const double loss =
        residual.squaredNorm() / (2.0 * static_cast<double>(batch));
    if (!std::isfinite(loss)) throw DivergedLoss("loss became non-finite");
    losses.push_back(loss);
    if (step == steps) break;
    // loss reads z only, so the cotangent seed sits on the z side
    const Eigen::MatrixXd u0 = residual / static_cast<double>(batch);
    const DualState d = student.backward(s, v0, u0);
    raw -= lr * param_gradient(s, d, p);
  }
  return losses;
}

std::string loss_csv(const std::vector<double>& losses) {
  std::string out = "step,loss\n";
  char buf[64];
  for (size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, losses[i]);
    out += buf;
  }
  return out;
}

}  // namespace machines
