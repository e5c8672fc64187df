#include "machines/dense.hpp"

#include <string>
#include <utility>

namespace machines {

namespace {

void require_shape(const Eigen::MatrixXd& a, Index rows, Index cols,
                   const char* what) {
  if (a.rows() != rows || a.cols() != cols)
    throw SizeMismatch(std::string(what) + " has shape " +
                       std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + ", expected " +
                       std::to_string(rows) + "x" + std::to_string(cols));
}

void require_finite(const Eigen::MatrixXd& a, const char* what) {
  if (!a.allFinite())
    throw NonFiniteInput(std::string(what) + " contains NaN or Inf");
}

}  // namespace

DenseMachine::DenseMachine(MaskedDense op, Activation act)
    : op_(std::move(op)), act_(act) {
  const Partition& p = op_.partition;
  const Eigen::MatrixXd& W = op_.masked;
  w_rows_.reserve(static_cast<size_t>(p.num_blocks()));
  wt_rows_.reserve(static_cast<size_t>(p.num_blocks()));
  for (int b = 0; b < p.num_blocks(); ++b) {
    const IndexList& blk = p.block(b);
    Eigen::MatrixXd rows(static_cast<Index>(blk.size()), p.size());
    Eigen::MatrixXd cols(static_cast<Index>(blk.size()), p.size());
    for (size_t j = 0; j < blk.size(); ++j) {
      rows.row(static_cast<Index>(j)) = W.row(blk[j]);
      cols.row(static_cast<Index>(j)) = W.col(blk[j]).transpose();
    }
    w_rows_.push_back(std::move(rows));
    wt_rows_.push_back(std::move(cols));
  }
}

MachineState DenseMachine::forward(const Eigen::MatrixXd& y0,
                                   const Eigen::MatrixXd& z0) const {
  require_shape(z0, y0.rows(), y0.cols(), "z0");
  require_shape(y0, size(), y0.cols(), "y0");
  require_finite(y0, "y0");
  require_finite(z0, "z0");

  MachineState s{y0, z0};
  const Partition& p = op_.partition;
  Eigen::MatrixXd yb;
  for (int b = 0; b < p.num_blocks(); ++b) {
    const IndexList& blk = p.block(b);
    const Index rows = static_cast<Index>(blk.size());
    // Masked columns of later blocks are zero, so the full current z is
    // safe to multiply against.
    yb = w_rows_[static_cast<size_t>(b)] * s.z;
    for (Index j = 0; j < rows; ++j) yb.row(j) += s.y.row(blk[static_cast<size_t>(j)]);
    const Eigen::MatrixXd zb = act_.apply(yb);
    for (Index j = 0; j < rows; ++j) {
      s.y.row(blk[static_cast<size_t>(j)]) = yb.row(j);
      s.z.row(blk[static_cast<size_t>(j)]) += zb.row(j);
    }
  }
  return s;
}

MachineState DenseMachine::forward_naive(const Eigen::MatrixXd& y0,
                                         const Eigen::MatrixXd& z0,
                                         int sweeps) const {
  require_shape(z0, y0.rows(), y0.cols(), "z0");
  require_shape(y0, size(), y0.cols(), "y0");

  Eigen::MatrixXd y = y0;
  Eigen::MatrixXd z = z0;
  Eigen::MatrixXd y_next, z_next;
  for (int k = 0; k < sweeps; ++k) {
    y_next = op_.masked * z + y0;
    z_next = act_.apply(y) + z0;
    y.swap(y_next);
    z.swap(z_next);
  }
  return MachineState{std::move(y), std::move(z)};
}

DualState DenseMachine::backward(const MachineState& s,
                                 const Eigen::MatrixXd& v0,
                                 const Eigen::MatrixXd& u0) const {
  if (s.y.rows() != size() || s.z.rows() != s.y.rows() ||
      s.z.cols() != s.y.cols())
    throw StateMismatch("state does not belong to this machine");
  require_shape(v0, s.y.rows(), s.y.cols(), "v0");
  require_shape(u0, s.y.rows(), s.y.cols(), "u0");

  DualState d{v0, u0};
  const Partition& p = op_.partition;
  Eigen::MatrixXd ub, yb;
  for (int b = p.num_blocks() - 1; b >= 0; --b) {
    const IndexList& blk = p.block(b);
    const Index rows = static_cast<Index>(blk.size());
    ub = wt_rows_[static_cast<size_t>(b)] * d.v;
    yb.resize(rows, s.y.cols());
    for (Index j = 0; j < rows; ++j) {
      ub.row(j) += d.u.row(blk[static_cast<size_t>(j)]);
      yb.row(j) = s.y.row(blk[static_cast<size_t>(j)]);
    }
    const Eigen::MatrixXd vb = act_.derivative(yb).cwiseProduct(ub);
    for (Index j = 0; j < rows; ++j) {
      d.u.row(blk[static_cast<size_t>(j)]) = ub.row(j);
      d.v.row(blk[static_cast<size_t>(j)]) += vb.row(j);
    }
  }
  return d;
}

Eigen::MatrixXd param_gradient(const MachineState& s, const DualState& d,
                               const Partition& p) {
  if (s.z.rows() != p.size() || d.v.rows() != p.size() ||
      s.z.cols() != d.v.cols())
    throw SizeMismatch("state and dual state do not match the partition");
  return apply_block_mask(d.v * s.z.transpose(), p);
}

}  // namespace machines
