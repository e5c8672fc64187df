#pragma once

#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "machines/activation.hpp"
#include "machines/conv.hpp"
#include "machines/dense.hpp"
#include "machines/linear.hpp"
#include "machines/partition.hpp"

namespace machines {

using RandomEngine = std::mt19937_64;

// Entries uniform in [-0.5, 0.5], times scale.
Eigen::MatrixXd random_matrix(Index rows, Index cols, RandomEngine& rng,
                              double scale = 1.0);

// Random partition of 0..size-1 into num_blocks nonempty blocks; indices
// are shuffled first, so blocks are generally non-contiguous.
Partition random_partition(Index size, int num_blocks, RandomEngine& rng);

std::vector<IndexList> random_channel_groups(Index n_c, int num_groups,
                                             RandomEngine& rng);

// Masked dense operator with raw entries scaled by 1/size.
MaskedDense random_masked_dense(Index size, int num_blocks, RandomEngine& rng);

DenseMachine random_dense_machine(Index size, int num_blocks,
                                  const Activation& act, RandomEngine& rng);

// Strictly block-lower linear machine over a random partition.
LinearMachine random_strictly_lower(Index size, int num_blocks,
                                    RandomEngine& rng);

// Pair with F1 * F2 = 0, i.e. f1 independent of f2; with mutual set, also
// F2 * F1 = 0. Both factors are strictly block-lower, hence finite depth.
std::pair<LinearMachine, LinearMachine> random_independent_pair(
    Index size, RandomEngine& rng, bool mutual);

// Kernel entries scaled by 1 / (num_lags * channels).
ConvKernel random_kernel(Index num_lags, Index channels, Index n_t,
                         RandomEngine& rng);

ConvMachine random_conv_machine(Index n_t, Index n_c, int num_groups,
                                Index num_lags, GridTag style,
                                const Activation& act, RandomEngine& rng);

}  // namespace machines
