#pragma once

#include <Eigen/Dense>
#include <vector>

#include "machines/errors.hpp"

namespace machines {

using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Ordered partition of {0, ..., N-1} into disjoint nonempty blocks.
///
/// The block order is fixed at construction and determines which entries
/// survive the strict block-lower mask: an operator entry (r, c) is kept
/// only when the block of r comes strictly after the block of c. Blocks
/// may be non-contiguous index sets.
class Partition {
 public:
  Partition(std::vector<IndexList> blocks, Index total_size);

  Index size() const { return size_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<IndexList>& blocks() const { return blocks_; }
  const IndexList& block(int i) const;
  int block_of(Index flat) const;

  /// Indicator of the union of blocks 0..i. Accepts i = -1 (empty mask)
  /// through num_blocks()-1 (all true); monotone in i.
  std::vector<bool> cumulative_mask(int i) const;

  /// One singleton block per index, in index order.
  static Partition singletons(Index n);
  /// Contiguous blocks of the given sizes, laid out left to right.
  static Partition contiguous(const std::vector<Index>& block_sizes);

 private:
  std::vector<IndexList> blocks_;
  std::vector<int> block_of_;
  Index size_ = 0;
};

/// Validating constructor wrapper; rejects overlaps, gaps and empty blocks.
Partition make_partition(std::vector<IndexList> blocks, Index total_size);

/// Zero out all entries of a square matrix that the partition's strict
/// block-lower mask forbids: result(r, c) = L(r, c) iff block(r) > block(c).
Eigen::MatrixXd apply_block_mask(const Eigen::MatrixXd& L, const Partition& p);

/// Dense square operator together with its masked form.
///
/// `raw` keeps the unmodified parameter matrix; `masked` is the strictly
/// block-lower operator actually applied by the machines. The masked
/// matrix is nilpotent: masked^num_blocks == 0.
struct MaskedDense {
  Eigen::MatrixXd raw;
  Eigen::MatrixXd masked;
  Partition partition;
};

MaskedDense mask_dense(const Eigen::MatrixXd& L, const Partition& p);

}  // namespace machines
