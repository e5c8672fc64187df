#include "machines/conv.hpp"

#include <utility>

#include "machines/errors.hpp"

namespace machines {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

void check_kernel(const ConvKernel& kernel) {
  if (kernel.lags.empty())
    throw ShapeMismatch("kernel needs at least one lag");
  const Index n_c = kernel.lags.front().rows();
  if (n_c < 1) throw ShapeMismatch("kernel needs at least one channel");
  for (const auto& lag : kernel.lags)
    if (lag.rows() != n_c || lag.cols() != n_c)
      throw ShapeMismatch("kernel lags must all be channels x channels");
  if (kernel.num_lags() > kernel.n_t)
    throw ShapeMismatch("kernel has more lags than time steps");
}

// Channel groups must partition 0..n_c-1; returns n_c.
Index check_groups(const std::vector<IndexList>& groups) {
  Index n_c = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw EmptyBlock("empty channel group");
    n_c += static_cast<Index>(g.size());
  }
  std::vector<bool> seen(static_cast<size_t>(n_c), false);
  for (const auto& g : groups)
    for (Index c : g) {
      if (c < 0 || c >= n_c)
        throw UncoveredIndices("channel groups do not cover the channels");
      if (seen[static_cast<size_t>(c)])
        throw OverlappingBlocks("channel appears in two groups");
      seen[static_cast<size_t>(c)] = true;
    }
  return n_c;
}

void check_time(Index n_t) {
  if (n_t < 1) throw Error("time length must be positive");
}

}  // namespace

ConvKernel zero_kernel(Index num_lags, Index channels, Index n_t) {
  ConvKernel kernel;
  kernel.lags.assign(static_cast<size_t>(num_lags),
                     Eigen::MatrixXd::Zero(channels, channels));
  kernel.n_t = n_t;
  check_kernel(kernel);
  return kernel;
}

GridPartition::GridPartition(Index n_t, Index n_c, GridTag tag,
                             Partition partition)
    : n_t_(n_t), n_c_(n_c), tag_(tag), partition_(std::move(partition)) {}

GridPartition GridPartition::conv_style(
    Index n_t, const std::vector<IndexList>& channel_groups) {
  check_time(n_t);
  const Index n_c = check_groups(channel_groups);
  std::vector<IndexList> blocks;
  blocks.reserve(channel_groups.size());
  for (const auto& group : channel_groups) {
    IndexList blk;
    blk.reserve(group.size() * static_cast<size_t>(n_t));
    for (Index t = 0; t < n_t; ++t)
      for (Index c : group) blk.push_back(t * n_c + c);
    blocks.push_back(std::move(blk));
  }
  return GridPartition(n_t, n_c, GridTag::ConvStyle,
                       Partition(std::move(blocks), n_t * n_c));
}

GridPartition GridPartition::recurrent_style(
    Index n_t, const std::vector<IndexList>& channel_groups) {
  check_time(n_t);
  const Index n_c = check_groups(channel_groups);
  std::vector<IndexList> blocks;
  blocks.reserve(channel_groups.size() * static_cast<size_t>(n_t));
  for (Index t = 0; t < n_t; ++t)
    for (const auto& group : channel_groups) {
      IndexList blk;
      blk.reserve(group.size());
      for (Index c : group) blk.push_back(t * n_c + c);
      blocks.push_back(std::move(blk));
    }
  return GridPartition(n_t, n_c, GridTag::RecurrentStyle,
                       Partition(std::move(blocks), n_t * n_c));
}

GridPartition GridPartition::custom(Index n_t, Index n_c, Partition partition) {
  check_time(n_t);
  if (n_c < 1) throw Error("channel count must be positive");
  if (partition.size() != n_t * n_c)
    throw SizeMismatch("partition does not cover the (t, c) grid");
  return GridPartition(n_t, n_c, GridTag::Custom, std::move(partition));
}

Eigen::MatrixXd conv_forward_op(const ConvKernel& kernel,
                                const Eigen::MatrixXd& z) {
  check_kernel(kernel);
  if (z.rows() != kernel.n_t || z.cols() != kernel.channels())
    throw ShapeMismatch("input is not n_t x channels");
  const Index n_t = z.rows();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (Index tau = 0; tau < kernel.num_lags(); ++tau)
    y.middleRows(tau, n_t - tau).noalias() +=
        z.middleRows(0, n_t - tau) * kernel.lags[static_cast<size_t>(tau)];
  return y;
}

Eigen::MatrixXd conv_transpose_op(const ConvKernel& kernel,
                                  const Eigen::MatrixXd& v) {
  check_kernel(kernel);
  if (v.rows() != kernel.n_t || v.cols() != kernel.channels())
    throw ShapeMismatch("input is not n_t x channels");
  const Index n_t = v.rows();
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  for (Index tau = 0; tau < kernel.num_lags(); ++tau)
    u.middleRows(0, n_t - tau).noalias() +=
        v.middleRows(tau, n_t - tau) *
        kernel.lags[static_cast<size_t>(tau)].transpose();
  return u;
}

Eigen::MatrixXd conv_forward_flat(const ConvKernel& kernel,
                                  const Eigen::MatrixXd& z, Index n_t,
                                  Index n_c) {
  if (z.rows() != n_t * n_c) throw ShapeMismatch("flat input has wrong size");
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (Index col = 0; col < z.cols(); ++col) {
    ConstRowMap zs(z.col(col).data(), n_t, n_c);
    RowMap ys(y.col(col).data(), n_t, n_c);
    for (Index tau = 0; tau < kernel.num_lags(); ++tau)
      ys.middleRows(tau, n_t - tau).noalias() +=
          zs.middleRows(0, n_t - tau) * kernel.lags[static_cast<size_t>(tau)];
  }
  return y;
}

Eigen::MatrixXd conv_transpose_flat(const ConvKernel& kernel,
                                    const Eigen::MatrixXd& v, Index n_t,
                                    Index n_c) {
  if (v.rows() != n_t * n_c) throw ShapeMismatch("flat input has wrong size");
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  for (Index col = 0; col < v.cols(); ++col) {
    ConstRowMap vs(v.col(col).data(), n_t, n_c);
    RowMap us(u.col(col).data(), n_t, n_c);
    for (Index tau = 0; tau < kernel.num_lags(); ++tau)
      us.middleRows(0, n_t - tau).noalias() +=
          vs.middleRows(tau, n_t - tau) *
          kernel.lags[static_cast<size_t>(tau)].transpose();
  }
  return u;
}

ConvMachine::ConvMachine(ConvKernel kernel, GridPartition grid,
                         Activation activation)
    : kernel_(std::move(kernel)), grid_(std::move(grid)), act_(activation) {
  check_kernel(kernel_);
  if (kernel_.channels() != grid_.n_c())
    throw ShapeMismatch("kernel channels do not match the grid");
  if (kernel_.n_t != grid_.n_t())
    throw ShapeMismatch("kernel time length does not match the grid");
  const Partition& p = grid_.partition();
  slices_.resize(static_cast<size_t>(p.num_blocks()));
  for (int b = 0; b < p.num_blocks(); ++b) {
    auto& runs = slices_[static_cast<size_t>(b)];
    for (Index flat : p.block(b)) {
      const Index t = flat / grid_.n_c();
      if (runs.empty() || runs.back().t != t) runs.push_back({t, {}, {}});
      runs.back().chans.push_back(flat % grid_.n_c());
      runs.back().rows.push_back(flat);
    }
  }
}

void ConvMachine::check_inputs(const Eigen::MatrixXd& y0,
                               const Eigen::MatrixXd& z0,
                               const char* what) const {
  if (y0.rows() != size() || z0.rows() != y0.rows() ||
      z0.cols() != y0.cols() || y0.cols() < 1)
    throw ShapeMismatch(what);
  if (!y0.allFinite() || !z0.allFinite())
    throw NonFiniteInput("non-finite input");
}

MachineState ConvMachine::forward(const Eigen::MatrixXd& y0,
                                  const Eigen::MatrixXd& z0) const {
  check_inputs(y0, z0, "inputs do not match the machine grid");
  MachineState s{y0, z0};
  const Partition& p = grid_.partition();
  Eigen::MatrixXd z_done = Eigen::MatrixXd::Zero(s.z.rows(), s.z.cols());
  Eigen::MatrixXd yb;
  for (int b = 0; b < p.num_blocks(); ++b) {
    const Eigen::MatrixXd full =
        conv_forward_flat(kernel_, z_done, grid_.n_t(), grid_.n_c());
    const IndexList& blk = p.block(b);
    const Index rows = static_cast<Index>(blk.size());
    yb.resize(rows, s.y.cols());
    for (Index j = 0; j < rows; ++j) {
      const Index r = blk[static_cast<size_t>(j)];
      yb.row(j) = s.y.row(r) + full.row(r);
    }
    const Eigen::MatrixXd zb = act_.apply(yb);
    for (Index j = 0; j < rows; ++j) {
      const Index r = blk[static_cast<size_t>(j)];
      s.y.row(r) = yb.row(j);
      s.z.row(r) += zb.row(j);
    }
    for (Index r : blk) z_done.row(r) = s.z.row(r);
  }
  return s;
}

MachineState ConvMachine::forward_fast(const Eigen::MatrixXd& y0,
                                       const Eigen::MatrixXd& z0) const {
  check_inputs(y0, z0, "inputs do not match the machine grid");
  MachineState s{y0, z0};
  const Index n_c = grid_.n_c();
  const Index batch = s.y.cols();
  Eigen::MatrixXd z_done = Eigen::MatrixXd::Zero(s.z.rows(), batch);
  Eigen::MatrixXd upd;
  for (const auto& runs : slices_) {
    for (const TimeSlice& ts : runs) {
      const Index m = static_cast<Index>(ts.rows.size());
      upd.setZero(m, batch);
      for (Index tau = 0; tau < kernel_.num_lags() && tau <= ts.t; ++tau) {
        const Eigen::MatrixXd cols =
            kernel_.lags[static_cast<size_t>(tau)](Eigen::all, ts.chans);
        upd.noalias() +=
            cols.transpose() * z_done.middleRows((ts.t - tau) * n_c, n_c);
      }
      for (Index j = 0; j < m; ++j)
        upd.row(j) += s.y.row(ts.rows[static_cast<size_t>(j)]);
      const Eigen::MatrixXd zb = act_.apply(upd);
      for (Index j = 0; j < m; ++j) {
        const Index r = ts.rows[static_cast<size_t>(j)];
        s.y.row(r) = upd.row(j);
        s.z.row(r) += zb.row(j);
      }
    }
    // finalize only after the whole block: same-block slices must not see
    // each other through z_done
    for (const TimeSlice& ts : runs)
      for (Index r : ts.rows) z_done.row(r) = s.z.row(r);
  }
  return s;
}

DualState ConvMachine::backward(const MachineState& s,
                                const Eigen::MatrixXd& v0,
                                const Eigen::MatrixXd& u0) const {
  if (s.y.rows() != size() || s.z.rows() != s.y.rows() ||
      s.z.cols() != s.y.cols())
    throw StateMismatch("state does not belong to this machine");
  check_inputs(v0, u0, "seeds do not match the machine grid");
  if (v0.cols() != s.y.cols())
    throw ShapeMismatch("seeds do not match the state batch");
  DualState d{v0, u0};
  const Partition& p = grid_.partition();
  Eigen::MatrixXd v_done = Eigen::MatrixXd::Zero(d.v.rows(), d.v.cols());
  Eigen::MatrixXd ub, yb;
  for (int b = p.num_blocks() - 1; b >= 0; --b) {
    const Eigen::MatrixXd full =
        conv_transpose_flat(kernel_, v_done, grid_.n_t(), grid_.n_c());
    const IndexList& blk = p.block(b);
    const Index rows = static_cast<Index>(blk.size());
    ub.resize(rows, d.u.cols());
    yb.resize(rows, d.u.cols());
    for (Index j = 0; j < rows; ++j) {
      const Index r = blk[static_cast<size_t>(j)];
      ub.row(j) = d.u.row(r) + full.row(r);
      yb.row(j) = s.y.row(r);
    }
    const Eigen::MatrixXd vb = act_.derivative(yb).cwiseProduct(ub);
    for (Index j = 0; j < rows; ++j) {
      const Index r = blk[static_cast<size_t>(j)];
      d.u.row(r) = ub.row(j);
      d.v.row(r) += vb.row(j);
    }
    for (Index r : blk) v_done.row(r) = d.v.row(r);
  }
  return d;
}

DualState ConvMachine::backward_fast(const MachineState& s,
                                     const Eigen::MatrixXd& v0,
                                     const Eigen::MatrixXd& u0) const {
  if (s.y.rows() != size() || s.z.rows() != s.y.rows() ||
      s.z.cols() != s.y.cols())
    throw StateMismatch("state does not belong to this machine");
  check_inputs(v0, u0, "seeds do not match the machine grid");
  if (v0.cols() != s.y.cols())
    throw ShapeMismatch("seeds do not match the state batch");
  DualState d{v0, u0};
  const Index n_t = grid_.n_t();
  const Index n_c = grid_.n_c();
  const Index batch = d.v.cols();
  Eigen::MatrixXd v_done = Eigen::MatrixXd::Zero(d.v.rows(), batch);
  Eigen::MatrixXd upd, yb;
  for (auto runs = slices_.rbegin(); runs != slices_.rend(); ++runs) {
    for (const TimeSlice& ts : *runs) {
      const Index m = static_cast<Index>(ts.rows.size());
      upd.setZero(m, batch);
      for (Index tau = 0; tau < kernel_.num_lags() && ts.t + tau < n_t; ++tau) {
        const Eigen::MatrixXd rows_mat =
            kernel_.lags[static_cast<size_t>(tau)](ts.chans, Eigen::all);
        upd.noalias() += rows_mat * v_done.middleRows((ts.t + tau) * n_c, n_c);
      }
      yb.resize(m, batch);
      for (Index j = 0; j < m; ++j) {
        const Index r = ts.rows[static_cast<size_t>(j)];
        upd.row(j) += d.u.row(r);
        yb.row(j) = s.y.row(r);
      }
      const Eigen::MatrixXd vb = act_.derivative(yb).cwiseProduct(upd);
      for (Index j = 0; j < m; ++j) {
        const Index r = ts.rows[static_cast<size_t>(j)];
        d.u.row(r) = upd.row(j);
        d.v.row(r) += vb.row(j);
      }
    }
    for (const TimeSlice& ts : *runs)
      for (Index r : ts.rows) v_done.row(r) = d.v.row(r);
  }
  return d;
}

Eigen::MatrixXd ConvMachine::masked_apply(const Eigen::MatrixXd& z) const {
  if (z.rows() != size()) throw ShapeMismatch("input does not match the grid");
  const Partition& p = grid_.partition();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  Eigen::MatrixXd zm = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (int b = 0; b < p.num_blocks(); ++b) {
    if (b > 0) {
      const Eigen::MatrixXd full =
          conv_forward_flat(kernel_, zm, grid_.n_t(), grid_.n_c());
      for (Index r : p.block(b)) out.row(r) = full.row(r);
    }
    for (Index r : p.block(b)) zm.row(r) = z.row(r);
  }
  return out;
}

Eigen::MatrixXd ConvMachine::masked_transpose_apply(
    const Eigen::MatrixXd& v) const {
  if (v.rows() != size()) throw ShapeMismatch("input does not match the grid");
  const Partition& p = grid_.partition();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  Eigen::MatrixXd vm = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  for (int b = p.num_blocks() - 1; b >= 0; --b) {
    if (b + 1 < p.num_blocks()) {
      const Eigen::MatrixXd full =
          conv_transpose_flat(kernel_, vm, grid_.n_t(), grid_.n_c());
      for (Index r : p.block(b)) out.row(r) = full.row(r);
    }
    for (Index r : p.block(b)) vm.row(r) = v.row(r);
  }
  return out;
}

ConvKernel kernel_gradient(const MachineState& s, const DualState& d,
                           const ConvMachine& m) {
  if (s.z.rows() != m.size() || d.v.rows() != m.size() ||
      s.z.cols() != d.v.cols())
    throw ShapeMismatch("state and dual state do not match the machine");
  const Index n_t = m.grid().n_t();
  const Index n_c = m.grid().n_c();
  const Partition& p = m.grid().partition();
  std::vector<int> block_of(static_cast<size_t>(m.size()));
  for (Index r = 0; r < m.size(); ++r)
    block_of[static_cast<size_t>(r)] = p.block_of(r);
  ConvKernel q = zero_kernel(m.kernel().num_lags(), n_c, n_t);
  for (Index col = 0; col < s.z.cols(); ++col) {
    ConstRowMap zs(s.z.col(col).data(), n_t, n_c);
    ConstRowMap vs(d.v.col(col).data(), n_t, n_c);
    for (Index tau = 0; tau < q.num_lags(); ++tau) {
      Eigen::MatrixXd& q_tau = q.lags[static_cast<size_t>(tau)];
      for (Index t = tau; t < n_t; ++t)
        for (Index c1 = 0; c1 < n_c; ++c1) {
          const int bin = block_of[static_cast<size_t>((t - tau) * n_c + c1)];
          for (Index c2 = 0; c2 < n_c; ++c2)
            if (bin < block_of[static_cast<size_t>(t * n_c + c2)])
              q_tau(c1, c2) += zs(t - tau, c1) * vs(t, c2);
        }
    }
  }
  return q;
}

MachineState rnn_oracle(const ConvMachine& m, const Eigen::MatrixXd& y0,
                        const Eigen::MatrixXd& z0) {
  if (m.grid().tag() != GridTag::RecurrentStyle)
    throw WrongPartitionTag("rnn_oracle needs a recurrent-style partition");
  if (y0.rows() != m.size() || z0.rows() != y0.rows() ||
      z0.cols() != y0.cols())
    throw ShapeMismatch("inputs do not match the machine grid");
  const Index n_t = m.grid().n_t();
  const Index n_c = m.grid().n_c();
  const auto& lags = m.kernel().lags;
  const Index k = m.kernel().num_lags();
  const Activation& act = m.activation();
  // channel groups, read off the time-0 blocks of the partition
  const Partition& p = m.grid().partition();
  const Index groups = p.num_blocks() / n_t;
  std::vector<IndexList> ch(static_cast<size_t>(groups));
  for (Index g = 0; g < groups; ++g)
    for (Index flat : p.block(static_cast<int>(g)))
      ch[static_cast<size_t>(g)].push_back(flat % n_c);
  Eigen::MatrixXd y = y0;
  Eigen::MatrixXd z = z0;
  Eigen::RowVectorXd acc(y.cols());
  for (Index t = 0; t < n_t; ++t)
    for (Index g = 0; g < groups; ++g)
      for (Index c2 : ch[static_cast<size_t>(g)]) {
        acc.setZero();
        // earlier time steps: every channel is visible
        for (Index tau = 1; tau <= t && tau < k; ++tau)
          for (Index c1 = 0; c1 < n_c; ++c1)
            acc += lags[static_cast<size_t>(tau)](c1, c2) *
                   z.row((t - tau) * n_c + c1);
        // current time step: only earlier groups
        for (Index h = 0; h < g; ++h)
          for (Index c1 : ch[static_cast<size_t>(h)])
            acc += lags[0](c1, c2) * z.row(t * n_c + c1);
        const Index r = t * n_c + c2;
        y.row(r) += acc;
        for (Index col = 0; col < y.cols(); ++col)
          z(r, col) += act.apply(y(r, col));
      }
  return {y, z};
}

}  // namespace machines
