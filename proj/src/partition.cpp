#include "machines/partition.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>

namespace machines {

Partition::Partition(std::vector<IndexList> blocks, Index total_size)
    : blocks_(std::move(blocks)), size_(total_size) {
  if (size_ <= 0) throw Error("partition size must be positive");
  if (blocks_.empty())
    throw UncoveredIndices("partition has no blocks but size is " +
                           std::to_string(size_));

  block_of_.assign(static_cast<size_t>(size_), -1);
  for (size_t b = 0; b < blocks_.size(); ++b) {
    if (blocks_[b].empty())
      throw EmptyBlock("block " + std::to_string(b) + " is empty");
    for (Index idx : blocks_[b]) {
      if (idx < 0 || idx >= size_)
        throw UncoveredIndices("index " + std::to_string(idx) +
                               " outside [0, " + std::to_string(size_) + ")");
      if (block_of_[static_cast<size_t>(idx)] != -1)
        throw OverlappingBlocks("index " + std::to_string(idx) +
                                " appears in more than one block");
      block_of_[static_cast<size_t>(idx)] = static_cast<int>(b);
    }
  }
  for (Index i = 0; i < size_; ++i) {
    if (block_of_[static_cast<size_t>(i)] == -1)
      throw UncoveredIndices("index " + std::to_string(i) +
                             " is not covered by any block");
  }
  // Canonical order inside a block; block membership is what matters.
  for (auto& blk : blocks_) std::sort(blk.begin(), blk.end());
}

const IndexList& Partition::block(int i) const {
  if (i < 0 || i >= num_blocks())
    throw BlockIndexOutOfRange("block index " + std::to_string(i));
  return blocks_[static_cast<size_t>(i)];
}

int Partition::block_of(Index flat) const {
  if (flat < 0 || flat >= size_)
    throw BlockIndexOutOfRange("flat index " + std::to_string(flat));
  return block_of_[static_cast<size_t>(flat)];
}

std::vector<bool> Partition::cumulative_mask(int i) const {
  if (i < -1 || i >= num_blocks())
    throw BlockIndexOutOfRange("cumulative mask index " + std::to_string(i));
  std::vector<bool> mask(static_cast<size_t>(size_), false);
  for (int b = 0; b <= i; ++b)
    for (Index idx : blocks_[static_cast<size_t>(b)])
      mask[static_cast<size_t>(idx)] = true;
  return mask;
}

Partition Partition::singletons(Index n) {
  std::vector<IndexList> blocks(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) blocks[static_cast<size_t>(i)] = {i};
  return Partition(std::move(blocks), n);
}

Partition Partition::contiguous(const std::vector<Index>& block_sizes) {
  std::vector<IndexList> blocks;
  Index next = 0;
  for (Index s : block_sizes) {
    IndexList blk(static_cast<size_t>(s));
    std::iota(blk.begin(), blk.end(), next);
    next += s;
    blocks.push_back(std::move(blk));
  }
  return Partition(std::move(blocks), next);
}

Partition make_partition(std::vector<IndexList> blocks, Index total_size) {
  return Partition(std::move(blocks), total_size);
}

Eigen::MatrixXd apply_block_mask(const Eigen::MatrixXd& L, const Partition& p) {
  if (L.rows() != p.size() || L.cols() != p.size())
    throw SizeMismatch("matrix is " + std::to_string(L.rows()) + "x" +
                       std::to_string(L.cols()) + ", partition covers " +
                       std::to_string(p.size()) + " indices");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(L.rows(), L.cols());
  for (Index c = 0; c < L.cols(); ++c) {
    const int bc = p.block_of(c);
    for (Index r = 0; r < L.rows(); ++r)
      if (p.block_of(r) > bc) out(r, c) = L(r, c);
  }
  return out;
}

MaskedDense mask_dense(const Eigen::MatrixXd& L, const Partition& p) {
  return MaskedDense{L, apply_block_mask(L, p), p};
}

}  // namespace machines
