#include "machines/generate.hpp"

#include <algorithm>
#include <numeric>

#include "machines/errors.hpp"

namespace machines {

namespace {

// Split a shuffled index list into `parts` nonempty consecutive runs.
std::vector<IndexList> random_split(IndexList items, int parts,
                                    RandomEngine& rng) {
  const Index n = static_cast<Index>(items.size());
  if (parts < 1 || static_cast<Index>(parts) > n)
    throw Error("cannot split into that many nonempty parts");
  std::shuffle(items.begin(), items.end(), rng);
  IndexList cuts(static_cast<size_t>(n - 1));
  std::iota(cuts.begin(), cuts.end(), Index{1});
  std::shuffle(cuts.begin(), cuts.end(), rng);
  cuts.resize(static_cast<size_t>(parts - 1));
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(n);
  std::vector<IndexList> out;
  out.reserve(static_cast<size_t>(parts));
  Index begin = 0;
  for (Index end : cuts) {
    out.emplace_back(items.begin() + begin, items.begin() + end);
    begin = end;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd random_matrix(Index rows, Index cols, RandomEngine& rng,
                              double scale) {
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  Eigen::MatrixXd m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = scale * dist(rng);
  return m;
}

Partition random_partition(Index size, int num_blocks, RandomEngine& rng) {
  IndexList all(static_cast<size_t>(size));
  std::iota(all.begin(), all.end(), Index{0});
  return Partition(random_split(std::move(all), num_blocks, rng), size);
}

std::vector<IndexList> random_channel_groups(Index n_c, int num_groups,
                                             RandomEngine& rng) {
  IndexList all(static_cast<size_t>(n_c));
  std::iota(all.begin(), all.end(), Index{0});
  return random_split(std::move(all), num_groups, rng);
}

MaskedDense random_masked_dense(Index size, int num_blocks,
                                RandomEngine& rng) {
  Partition p = random_partition(size, num_blocks, rng);
  Eigen::MatrixXd raw =
      random_matrix(size, size, rng, 1.0 / static_cast<double>(size));
  return mask_dense(raw, std::move(p));
}

DenseMachine random_dense_machine(Index size, int num_blocks,
                                  const Activation& act, RandomEngine& rng) {
  return DenseMachine(random_masked_dense(size, num_blocks, rng), act);
}

LinearMachine random_strictly_lower(Index size, int num_blocks,
                                    RandomEngine& rng) {
  return LinearMachine{random_masked_dense(size, num_blocks, rng).masked};
}

std::pair<LinearMachine, LinearMachine> random_independent_pair(
    Index size, RandomEngine& rng, bool mutual) {
  if (size < 2) throw Error("need at least two coordinates for a pair");
  const int blocks =
      static_cast<int>(std::min<Index>(size, 2 + (rng() % 3)));
  const Eigen::MatrixXd w1 = random_masked_dense(size, blocks, rng).masked;
  const Eigen::MatrixXd w2 = random_masked_dense(size, blocks, rng).masked;
  // random coordinate split: F1 reads only A; F2 writes only its complement
  IndexList coords(static_cast<size_t>(size));
  std::iota(coords.begin(), coords.end(), Index{0});
  std::shuffle(coords.begin(), coords.end(), rng);
  const size_t cut = 1 + rng() % static_cast<size_t>(size - 1);
  Eigen::VectorXd in_a = Eigen::VectorXd::Zero(size);
  for (size_t i = 0; i < cut; ++i) in_a(coords[i]) = 1.0;
  const Eigen::MatrixXd pa = in_a.asDiagonal();
  const Eigen::MatrixXd pb =
      Eigen::MatrixXd::Identity(size, size) - pa;
  Eigen::MatrixXd f1, f2;
  if (mutual) {
    f1 = pa * w1 * pa;
    f2 = pb * w2 * pb;
  } else {
    f1 = w1 * pa;
    f2 = pb * w2;
  }
  return {LinearMachine{f1}, LinearMachine{f2}};
}

ConvKernel random_kernel(Index num_lags, Index channels, Index n_t,
                         RandomEngine& rng) {
  ConvKernel kernel = zero_kernel(num_lags, channels, n_t);
  const double scale =
      1.0 / static_cast<double>(num_lags * channels);
  for (auto& lag : kernel.lags)
    lag = random_matrix(channels, channels, rng, scale);
  return kernel;
}

ConvMachine random_conv_machine(Index n_t, Index n_c, int num_groups,
                                Index num_lags, GridTag style,
                                const Activation& act, RandomEngine& rng) {
  const auto groups = random_channel_groups(n_c, num_groups, rng);
  GridPartition grid = style == GridTag::RecurrentStyle
                           ? GridPartition::recurrent_style(n_t, groups)
                           : GridPartition::conv_style(n_t, groups);
  return ConvMachine(random_kernel(num_lags, n_c, n_t, rng), std::move(grid),
                     act);
}

}  // namespace machines
