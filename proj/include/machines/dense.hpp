#pragma once

#include <Eigen/Dense>
#include <vector>

#include "machines/activation.hpp"
#include "machines/partition.hpp"

namespace machines {

/// Pre-activation (y) and post-activation (z) halves of the machine
/// state. Columns are independent batch samples.
///
/// A solved state satisfies y = W z + y0 and z = sigma(y) + z0.
struct MachineState {
  Eigen::MatrixXd y;
  Eigen::MatrixXd z;
};

/// Cotangent state of the dual machine: v pairs with y, u with z.
/// A solved dual state satisfies u = W^T v + u0 and
/// v = sigma'(y) .* u + v0.
struct DualState {
  Eigen::MatrixXd v;
  Eigen::MatrixXd u;
};

/// Masked dense operator plus a pointwise nonlinearity.
///
/// The forward pass solves the two coupled equations above blockwise in
/// ascending block order, one visit per block; the backward pass runs the
/// dual machine blockwise in descending order. Machines are immutable and
/// safe to share across threads; every call allocates its own state.
class DenseMachine {
 public:
  DenseMachine(MaskedDense op, Activation act);

  Index size() const { return op_.partition.size(); }
  int num_blocks() const { return op_.partition.num_blocks(); }
  const MaskedDense& op() const { return op_; }
  const Partition& partition() const { return op_.partition; }
  const Activation& activation() const { return act_; }

  /// Blockwise solve. Exact after one sweep over the blocks.
  MachineState forward(const Eigen::MatrixXd& y0,
                       const Eigen::MatrixXd& z0) const;

  /// Fixed-point iteration (y, z) <- (W z + y0, sigma(y) + z0) started at
  /// (y0, z0), both components updated simultaneously. Reaches the
  /// blockwise solution once sweeps covers the machine depth.
  MachineState forward_naive(const Eigen::MatrixXd& y0,
                             const Eigen::MatrixXd& z0, int sweeps) const;

  /// Dual-machine solve; (v, u) is the cotangent (v0, u0) pulled back to
  /// the input embedding.
  DualState backward(const MachineState& s, const Eigen::MatrixXd& v0,
                     const Eigen::MatrixXd& u0) const;

 private:
  MaskedDense op_;
  Activation act_;
  // Per-block slices of the masked operator, gathered once: rows of W for
  // the forward pass, rows of W^T (columns of W) for the backward pass.
  std::vector<Eigen::MatrixXd> w_rows_;
  std::vector<Eigen::MatrixXd> wt_rows_;
};

/// Cotangent backpropagated to the dense parameters: the outer product
/// v z^T (summed over the batch) under the partition's strict
/// block-lower mask.
Eigen::MatrixXd param_gradient(const MachineState& s, const DualState& d,
                               const Partition& p);

}  // namespace machines
