#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace machines {

// Toy regression: fit a dense tanh machine, starting from a zero operator,
// to the output of a hidden teacher machine on a fixed batch (full-batch
// gradient descent on the raw operator entries through the masked
// parameter gradient). Returns the per-step mean-squared loss trace,
// steps + 1 entries including the initial loss.
std::vector<double> train_toy_regression(int steps, double lr,
                                         std::uint64_t seed);

// "step,loss" CSV of a loss trace.
std::string loss_csv(const std::vector<double>& losses);

}  // namespace machines
