#pragma once

#include <vector>

#include <Eigen/Dense>

#include "machines/activation.hpp"
#include "machines/dense.hpp"
#include "machines/partition.hpp"

namespace machines {

// 1-D causal convolution kernel over n_t time steps. lags[tau](c1, c2)
// weights the contribution of input channel c1 at time t - tau to output
// channel c2 at time t. Lag 0 is legal; the partition mask, not the kernel
// shape, keeps the machine well-founded.
struct ConvKernel {
  std::vector<Eigen::MatrixXd> lags;  // each channels x channels
  Index n_t = 0;

  Index num_lags() const { return static_cast<Index>(lags.size()); }
  Index channels() const { return lags.empty() ? 0 : lags.front().rows(); }
};

ConvKernel zero_kernel(Index num_lags, Index channels, Index n_t);

enum class GridTag { ConvStyle, RecurrentStyle, Custom };

// Partition of the flattened (t, c) grid. Flattening is time-major:
// flat = t * n_c + c.
class GridPartition {
 public:
  // One block per channel group, spanning all time steps.
  static GridPartition conv_style(Index n_t,
                                  const std::vector<IndexList>& channel_groups);
  // One block per (time step, channel group), in lexicographic (t, group)
  // order.
  static GridPartition recurrent_style(
      Index n_t, const std::vector<IndexList>& channel_groups);
  static GridPartition custom(Index n_t, Index n_c, Partition partition);

  Index n_t() const { return n_t_; }
  Index n_c() const { return n_c_; }
  GridTag tag() const { return tag_; }
  const Partition& partition() const { return partition_; }

 private:
  GridPartition(Index n_t, Index n_c, GridTag tag, Partition partition);

  Index n_t_;
  Index n_c_;
  GridTag tag_;
  Partition partition_;
};

// Plain (unmasked) causal convolution of one sample, rows = time steps,
// columns = channels, and its exact adjoint.
Eigen::MatrixXd conv_forward_op(const ConvKernel& kernel,
                                const Eigen::MatrixXd& z);
Eigen::MatrixXd conv_transpose_op(const ConvKernel& kernel,
                                  const Eigen::MatrixXd& v);

// Same operators on a flattened batch: rows indexed by flat = t * n_c + c,
// one sample per column.
Eigen::MatrixXd conv_forward_flat(const ConvKernel& kernel,
                                  const Eigen::MatrixXd& z, Index n_t,
                                  Index n_c);
Eigen::MatrixXd conv_transpose_flat(const ConvKernel& kernel,
                                    const Eigen::MatrixXd& v, Index n_t,
                                    Index n_c);

// Partition-masked convolutional machine on the flattened grid. States are
// (n_t * n_c) x batch, one sample per column.
class ConvMachine {
 public:
  ConvMachine(ConvKernel kernel, GridPartition grid, Activation activation);

  Index size() const { return grid_.partition().size(); }
  int num_blocks() const { return grid_.partition().num_blocks(); }
  const ConvKernel& kernel() const { return kernel_; }
  const GridPartition& grid() const { return grid_; }
  const Activation& activation() const { return act_; }

  // Reference solver: recomputes the full convolution against the finalized
  // blocks before every block update.
  MachineState forward(const Eigen::MatrixXd& y0,
                       const Eigen::MatrixXd& z0) const;
  // Incremental solver; touches each masked weight once per pass and must
  // agree with forward() to 1e-10.
  MachineState forward_fast(const Eigen::MatrixXd& y0,
                            const Eigen::MatrixXd& z0) const;

  DualState backward(const MachineState& s, const Eigen::MatrixXd& v0,
                     const Eigen::MatrixXd& u0) const;
  DualState backward_fast(const MachineState& s, const Eigen::MatrixXd& v0,
                          const Eigen::MatrixXd& u0) const;

  // Masked operator W (resp. its adjoint) applied to a flattened batch;
  // used by the residual checks.
  Eigen::MatrixXd masked_apply(const Eigen::MatrixXd& z) const;
  Eigen::MatrixXd masked_transpose_apply(const Eigen::MatrixXd& v) const;

 private:
  // Run of flat indices of one block sharing a time step. Blocks store
  // sorted indices, so each block splits into a few of these.
  struct TimeSlice {
    Index t;
    IndexList chans;
    IndexList rows;
  };

  void check_inputs(const Eigen::MatrixXd& y0, const Eigen::MatrixXd& z0,
                    const char* what) const;

  ConvKernel kernel_;
  GridPartition grid_;
  Activation act_;
  std::vector<std::vector<TimeSlice>> slices_;
};

// Masked per-lag cross-correlation of z and v: the gradient of the seeded
// output functional with respect to the kernel entries.
ConvKernel kernel_gradient(const MachineState& s, const DualState& d,
                           const ConvMachine& m);

// Independently coded explicit time-loop reference for recurrent-style
// machines: previous time steps see every channel, the current time step
// sees only earlier channel groups.
MachineState rnn_oracle(const ConvMachine& m, const Eigen::MatrixXd& y0,
                        const Eigen::MatrixXd& z0);

}  // namespace machines
