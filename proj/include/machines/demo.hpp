#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "machines/partition.hpp"

namespace machines {

// Worked example: eight scalar coordinate spaces wired by five maps
//   f1: (x1, x2) -> x3,  f2: x1 -> x5,  f3: x3 -> x4,
//   f4: x4 -> (x5, x6, x7),  f5: x6 -> x8,
// each scaled by `weight`. The whole network is the sum of the depth-1
// machines f1, f2+f3, f4, f5, where each machine is independent of the
// following ones, so the resolvent factors as R_f5 R_f4 R_{f2+f3} R_f1.

// The four summand operators, in evaluation order, as 8x8 matrices.
std::vector<Eigen::MatrixXd> shortcut_demo_operators(double weight);

// Direct substitution of the closed-form output list y_1..y_8.
Eigen::VectorXd shortcut_demo_closed_form(double weight,
                                          const Eigen::VectorXd& x);

// Evaluation through the factored resolvent (each factor is id + f_i).
Eigen::VectorXd shortcut_demo_machine_eval(double weight,
                                           const Eigen::VectorXd& x);

// Text trace of the blockwise evaluation on the all-ones input.
std::string shortcut_demo_trace();

}  // namespace machines
