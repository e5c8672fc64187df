#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "machines/conv.hpp"
#include "machines/dense.hpp"

namespace machines {

constexpr double kFdStep = 1e-5;

struct CheckReport {
  std::string name;
  bool passed = false;
  double max_abs_error = 0.0;
  double tolerance = 0.0;
  std::string details;
};

CheckReport make_report(std::string name, double max_abs_error,
                        double tolerance, std::string details = "");

// Central difference (fn(x + step dir) - fn(x - step dir)) / (2 step).
double finite_diff_directional(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& x, const Eigen::VectorXd& dir, double step);

// Max-norm residual of the two machine sub-equations at a given state.
double machine_residual(const DenseMachine& m, const MachineState& s,
                        const Eigen::MatrixXd& y0, const Eigen::MatrixXd& z0);
double machine_residual(const ConvMachine& m, const MachineState& s,
                        const Eigen::MatrixXd& y0, const Eigen::MatrixXd& z0);
// Same for the dual machine.
double dual_residual(const DenseMachine& m, const MachineState& s,
                     const DualState& d, const Eigen::MatrixXd& v0,
                     const Eigen::MatrixXd& u0);
double dual_residual(const ConvMachine& m, const MachineState& s,
                     const DualState& d, const Eigen::MatrixXd& v0,
                     const Eigen::MatrixXd& u0);

CheckReport check_machine_residual(const DenseMachine& m,
                                   const Eigen::MatrixXd& y0,
                                   const Eigen::MatrixXd& z0);
CheckReport check_machine_residual(const ConvMachine& m,
                                   const Eigen::MatrixXd& y0,
                                   const Eigen::MatrixXd& z0);

// forward_naive at sweeps = 2n+1 and 2n+2 must be identical and equal to
// the blockwise forward (n = number of blocks).
CheckReport check_depth_bound(const DenseMachine& m, const Eigen::MatrixXd& y0,
                              const Eigen::MatrixXd& z0);

// Directional derivative of the full resolvent: finite differences against
// the linearized machine solve (input direction) and against the
// parameter-to-input composition (raw operator direction).
CheckReport check_thm3_forward_mode(const DenseMachine& m,
                                    const Eigen::VectorXd& y0,
                                    const Eigen::VectorXd& z0,
                                    const Eigen::MatrixXd& dir_p,
                                    const Eigen::VectorXd& dir_y0,
                                    const Eigen::VectorXd& dir_z0,
                                    double tolerance);

// Full-entry gradient checks of the loss <v0, y> + <u0, z>.
// Returns max over entries of |analytic - fd| / max(1, |analytic|).
double dense_param_gradient_error(const DenseMachine& m,
                                  const Eigen::MatrixXd& y0,
                                  const Eigen::MatrixXd& z0,
                                  const Eigen::MatrixXd& v0,
                                  const Eigen::MatrixXd& u0, double step);
double dense_input_gradient_error(const DenseMachine& m,
                                  const Eigen::MatrixXd& y0,
                                  const Eigen::MatrixXd& z0,
                                  const Eigen::MatrixXd& v0,
                                  const Eigen::MatrixXd& u0, double step);
double conv_kernel_gradient_error(const ConvMachine& m,
                                  const Eigen::MatrixXd& y0,
                                  const Eigen::MatrixXd& z0,
                                  const Eigen::MatrixXd& v0,
                                  const Eigen::MatrixXd& u0, double step);
double conv_input_gradient_error(const ConvMachine& m,
                                 const Eigen::MatrixXd& y0,
                                 const Eigen::MatrixXd& z0,
                                 const Eigen::MatrixXd& v0,
                                 const Eigen::MatrixXd& u0, double step);

struct SuiteOptions {
  std::uint64_t seed = 2024;
  bool inject_fault = false;
};

// Every module's property suite; deterministic for a fixed seed.
std::vector<CheckReport> run_all_checks(const SuiteOptions& options);

bool all_passed(const std::vector<CheckReport>& reports);
std::string reports_to_csv(const std::vector<CheckReport>& reports);

}  // namespace machines
