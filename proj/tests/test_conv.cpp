#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <limits>

#include "machines/conv.hpp"
#include "machines/errors.hpp"
#include "machines/generate.hpp"
#include "machines/verify.hpp"

using namespace machines;

namespace {

// one channel, two lags: pure unit delay
ConvKernel unit_delay(Index n_t) {
  ConvKernel k = zero_kernel(2, 1, n_t);
  k.lags[1](0, 0) = 1.0;
  return k;
}

ConvMachine unit_delay_machine(const Activation& act) {
  return ConvMachine(unit_delay(3), GridPartition::recurrent_style(3, {{0}}),
                     act);
}

}  // namespace

TEST_CASE("unit delay shifts one step forward") {
  Eigen::MatrixXd z(3, 1);
  z << 1, 0, 0;
  const Eigen::MatrixXd y = conv_forward_op(unit_delay(3), z);
  Eigen::MatrixXd expected(3, 1);
  expected << 0, 1, 0;
  CHECK((y - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transpose of the unit delay shifts backward") {
  Eigen::MatrixXd v(3, 1);
  v << 0, 1, 0;
  const Eigen::MatrixXd z = conv_transpose_op(unit_delay(3), v);
  Eigen::MatrixXd expected(3, 1);
  expected << 1, 0, 0;
  CHECK((z - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero kernel maps everything to zero") {
  RandomEngine rng(2);
  const ConvKernel k = zero_kernel(2, 3, 4);
  const Eigen::MatrixXd z = random_matrix(4, 3, rng);
  CHECK(conv_forward_op(k, z).cwiseAbs().maxCoeff() == 0.0);
  CHECK(conv_transpose_op(k, z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward op matches a four-nested-loop reference") {
  RandomEngine rng(37);
  const Index n_t = 5, n_c = 3, lags = 3;
  const ConvKernel k = random_kernel(lags, n_c, n_t, rng);
  const Eigen::MatrixXd z = random_matrix(n_t, n_c, rng);
  const Eigen::MatrixXd y = conv_forward_op(k, z);
  for (Index t = 0; t < n_t; ++t)
    for (Index c2 = 0; c2 < n_c; ++c2) {
      double acc = 0.0;
      for (Index tau = 0; tau < lags; ++tau)
        for (Index c1 = 0; c1 < n_c; ++c1)
          if (t - tau >= 0) acc += z(t - tau, c1) * k.lags[tau](c1, c2);
      CHECK(y(t, c2) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("adjointness of forward and transpose") {
  RandomEngine rng(3);
  const ConvKernel k = random_kernel(3, 2, 6, rng);
  const Eigen::MatrixXd z = random_matrix(6, 2, rng);
  const Eigen::MatrixXd v = random_matrix(6, 2, rng);
  const double a = conv_forward_op(k, z).cwiseProduct(v).sum();
  const double b = z.cwiseProduct(conv_transpose_op(k, v)).sum();
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("flat batch operator matches the per-sample operator") {
  RandomEngine rng(5);
  const Index n_t = 4, n_c = 3;
  const ConvKernel k = random_kernel(2, n_c, n_t, rng);
  const Eigen::MatrixXd z = random_matrix(n_t * n_c, 2, rng);
  const Eigen::MatrixXd y = conv_forward_flat(k, z, n_t, n_c);
  for (Index col = 0; col < 2; ++col) {
    Eigen::MatrixXd sample(n_t, n_c);
    for (Index t = 0; t < n_t; ++t)
      for (Index c = 0; c < n_c; ++c) sample(t, c) = z(t * n_c + c, col);
    const Eigen::MatrixXd ys = conv_forward_op(k, sample);
    for (Index t = 0; t < n_t; ++t)
      for (Index c = 0; c < n_c; ++c)
        CHECK(y(t * n_c + c, col) == doctest::Approx(ys(t, c)).epsilon(1e-14));
  }
}

TEST_CASE("recurrent machine accumulates the delayed unit impulses") {
  const ConvMachine m = unit_delay_machine(Activation::identity());
  Eigen::MatrixXd y0(3, 1), z0 = Eigen::MatrixXd::Zero(3, 1);
  y0 << 1, 0, 0;
  const MachineState s = m.forward(y0, z0);
  Eigen::MatrixXd expected(3, 1);
  expected << 1, 1, 1;
  CHECK((s.y - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((s.z - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("zero kernel machines pass inputs through") {
  RandomEngine rng(7);
  const Eigen::MatrixXd y0 = random_matrix(6, 2, rng);
  const Eigen::MatrixXd z0 = random_matrix(6, 2, rng);
  for (const GridTag style : {GridTag::ConvStyle, GridTag::RecurrentStyle}) {
    const GridPartition grid =
        style == GridTag::ConvStyle
            ? GridPartition::conv_style(3, {{0}, {1}})
            : GridPartition::recurrent_style(3, {{0}, {1}});
    const ConvMachine m(zero_kernel(2, 2, 3), grid, Activation::tanh());
    const MachineState s = m.forward(y0, z0);
    CHECK((s.y - y0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s.z - (y0.array().tanh().matrix() + z0)).cwiseAbs().maxCoeff() <=
          1e-15);
    const MachineState oracle_ok = style == GridTag::RecurrentStyle
                                       ? rnn_oracle(m, y0, z0)
                                       : s;
    CHECK((oracle_ok.y - s.y).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("single channel block sees no masked weights") {
  RandomEngine rng(9);
  const ConvMachine m(random_kernel(2, 2, 3, rng),
                      GridPartition::conv_style(3, {{0, 1}}),
                      Activation::tanh());
  CHECK(m.num_blocks() == 1);
  const Eigen::MatrixXd y0 = random_matrix(6, 1, rng);
  const Eigen::MatrixXd z0 = random_matrix(6, 1, rng);
  const MachineState s = m.forward(y0, z0);
  CHECK((s.y - y0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.z - (y0.array().tanh().matrix() + z0)).cwiseAbs().maxCoeff() <=
        1e-15);
}

TEST_CASE("zero dual seeds give a zero dual state") {
  RandomEngine rng(15);
  const ConvMachine m = random_conv_machine(4, 2, 2, 2, GridTag::ConvStyle,
                                            Activation::tanh(), rng);
  const Eigen::MatrixXd y0 = random_matrix(m.size(), 2, rng);
  const Eigen::MatrixXd z0 = random_matrix(m.size(), 2, rng);
  const MachineState s = m.forward(y0, z0);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(m.size(), 2);
  const DualState d = m.backward(s, zero, zero);
  CHECK(d.v.cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.u.cwiseAbs().maxCoeff() == 0.0);
  DualState dz;
  dz.v = zero;
  dz.u = zero;
  const ConvKernel q = kernel_gradient(s, dz, m);
  for (const Eigen::MatrixXd& lag : q.lags)
    CHECK(lag.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kernel gradient of the unit-delay machine") {
  const ConvMachine m = unit_delay_machine(Activation::identity());
  Eigen::MatrixXd y0(3, 1), z0 = Eigen::MatrixXd::Zero(3, 1);
  y0 << 1, 0, 0;
  const MachineState s = m.forward(y0, z0);
  Eigen::MatrixXd v0(3, 1), u0 = Eigen::MatrixXd::Zero(3, 1);
  v0 << 0, 0, 1;
  const DualState d = m.backward(s, v0, u0);
  const ConvKernel q = kernel_gradient(s, d, m);
  CHECK(q.lags[0](0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(q.lags[1](0, 0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("unit-delay gradients match finite differences") {
  const ConvMachine m = unit_delay_machine(Activation::identity());
  Eigen::MatrixXd y0(3, 1), z0 = Eigen::MatrixXd::Zero(3, 1);
  y0 << 1, 0, 0;
  Eigen::MatrixXd v0(3, 1), u0 = Eigen::MatrixXd::Zero(3, 1);
  v0 << 0, 0, 1;  // seed on the last time step
  CHECK(conv_kernel_gradient_error(m, y0, z0, v0, u0, kFdStep) <= 1e-5);
  CHECK(conv_input_gradient_error(m, y0, z0, v0, u0, kFdStep) <= 1e-5);
}

TEST_CASE("grid partitions flatten time-major") {
  const GridPartition g = GridPartition::recurrent_style(3, {{0}, {1}});
  CHECK(g.partition().num_blocks() == 6);
  // block order is (t, group): block 1 is group {1} at t = 0
  CHECK(g.partition().block(1) == IndexList{1});
  CHECK(g.partition().block(2) == IndexList{2});
  const GridPartition c = GridPartition::conv_style(3, {{0}, {1}});
  CHECK(c.partition().num_blocks() == 2);
  CHECK(c.partition().block(0) == IndexList{0, 2, 4});
}

TEST_CASE("fast and reference solvers agree") {
  RandomEngine rng(17);
  for (int rep = 0; rep < 6; ++rep) {
    const GridTag style =
        rep % 2 == 0 ? GridTag::ConvStyle : GridTag::RecurrentStyle;
    const ConvMachine m = random_conv_machine(
        4, 3, 2, 2, style, rep < 3 ? Activation::tanh() : Activation::relu(),
        rng);
    const Eigen::MatrixXd y0 = random_matrix(m.size(), 2, rng);
    const Eigen::MatrixXd z0 = random_matrix(m.size(), 2, rng);
    const MachineState a = m.forward(y0, z0);
    const MachineState b = m.forward_fast(y0, z0);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((a.z - b.z).cwiseAbs().maxCoeff() <= 1e-10);
    const Eigen::MatrixXd v0 = random_matrix(m.size(), 2, rng);
    const Eigen::MatrixXd u0 = random_matrix(m.size(), 2, rng);
    const DualState da = m.backward(a, v0, u0);
    const DualState db = m.backward_fast(a, v0, u0);
    CHECK((da.v - db.v).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((da.u - db.u).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("recurrent forward matches the explicit time loop") {
  RandomEngine rng(23);
  const ConvMachine m = random_conv_machine(5, 2, 2, 2, GridTag::RecurrentStyle,
                                            Activation::tanh(), rng);
  const Eigen::MatrixXd y0 = random_matrix(m.size(), 2, rng);
  const Eigen::MatrixXd z0 = random_matrix(m.size(), 2, rng);
  const MachineState a = m.forward(y0, z0);
  const MachineState b = rnn_oracle(m, y0, z0);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((a.z - b.z).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("rnn oracle rejects non-recurrent partitions") {
  RandomEngine rng(29);
  const ConvMachine m = random_conv_machine(4, 2, 2, 2, GridTag::ConvStyle,
                                            Activation::identity(), rng);
  CHECK_THROWS_AS(rnn_oracle(m, Eigen::MatrixXd::Zero(m.size(), 1),
                             Eigen::MatrixXd::Zero(m.size(), 1)),
                  WrongPartitionTag);
}

TEST_CASE("dual solve matches a dense linear oracle") {
  // with sigma = id the machine is linear; the dual state solves the
  // transposed stacked system, so a plain QR solve is an independent oracle
  RandomEngine rng(31);
  for (const GridTag style : {GridTag::ConvStyle, GridTag::RecurrentStyle}) {
    const ConvMachine m =
        random_conv_machine(3, 2, 2, 2, style, Activation::identity(), rng);
    const Index n = m.size();
    const Eigen::MatrixXd y0 = random_matrix(n, 1, rng);
    const Eigen::MatrixXd z0 = random_matrix(n, 1, rng);
    const MachineState s = m.forward(y0, z0);
    const Eigen::MatrixXd v0 = random_matrix(n, 1, rng);
    const Eigen::MatrixXd u0 = random_matrix(n, 1, rng);
    const DualState d = m.backward(s, v0, u0);

    // brute-force masked weight matrix straight from the definitions
    const ConvKernel& k = m.kernel();
    const Partition& p = m.grid().partition();
    const Index n_t = m.grid().n_t(), n_c = m.grid().n_c();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Index t = 0; t < n_t; ++t)
      for (Index tau = 0; tau < k.num_lags() && tau <= t; ++tau)
        for (Index c2 = 0; c2 < n_c; ++c2)
          for (Index c1 = 0; c1 < n_c; ++c1) {
            const Index row = t * n_c + c2, col = (t - tau) * n_c + c1;
            if (p.block_of(col) < p.block_of(row))
              w(row, col) += k.lags[tau](c1, c2);
          }
    Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    sys.topRightCorner(n, n) -= w.transpose();  // u = W^T v + u0
    sys.bottomLeftCorner(n, n) -=
        Eigen::MatrixXd::Identity(n, n);  // v = u + v0 (sigma' = 1)
    Eigen::VectorXd rhs(2 * n);
    rhs << u0, v0;
    const Eigen::VectorXd sol = sys.colPivHouseholderQr().solve(rhs);
    CHECK((d.u - sol.topRows(n)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((d.v - sol.bottomRows(n)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("kernel and grid guards") {
  ConvKernel bad = zero_kernel(2, 2, 4);
  bad.lags[1] = Eigen::MatrixXd::Zero(2, 3);
  CHECK_THROWS_AS(
      ConvMachine(bad, GridPartition::conv_style(4, {{0}, {1}}),
                  Activation::identity()),
      ShapeMismatch);
  // more lags than time steps
  CHECK_THROWS_AS(ConvMachine(zero_kernel(5, 1, 3),
                              GridPartition::conv_style(3, {{0}}),
                              Activation::identity()),
                  ShapeMismatch);
  // kernel channel count must match the grid
  CHECK_THROWS_AS(ConvMachine(zero_kernel(2, 3, 4),
                              GridPartition::conv_style(4, {{0}, {1}}),
                              Activation::identity()),
                  ShapeMismatch);
  CHECK_THROWS_AS(GridPartition::conv_style(4, {{0}, {0, 1}}),
                  OverlappingBlocks);
  CHECK_THROWS_AS(GridPartition::conv_style(4, {{0}, {2}}), UncoveredIndices);
}

TEST_CASE("machine input guards") {
  const ConvMachine m = unit_delay_machine(Activation::identity());
  const Eigen::MatrixXd good = Eigen::MatrixXd::Zero(3, 1);
  CHECK_THROWS_AS(m.forward(Eigen::MatrixXd::Zero(4, 1), good), ShapeMismatch);
  Eigen::MatrixXd nan = good;
  nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(m.forward(nan, good), NonFiniteInput);
  MachineState s;
  s.y = Eigen::MatrixXd::Zero(5, 1);
  s.z = Eigen::MatrixXd::Zero(5, 1);
  CHECK_THROWS_AS(m.backward(s, good, good), StateMismatch);
}
