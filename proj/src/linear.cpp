#include "machines/linear.hpp"

#include <cmath>
#include <string>

#include "machines/partition.hpp"

namespace machines {

namespace {

void require_square(const Eigen::MatrixXd& F) {
  if (F.rows() != F.cols())
    throw SizeMismatch("operator must be square, got " +
                       std::to_string(F.rows()) + "x" +
                       std::to_string(F.cols()));
}

double max_abs(const Eigen::MatrixXd& A) {
  return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

}  // namespace

std::optional<int> nilpotency_index(const LinearMachine& m, double tol) {
  require_square(m.F);
  const Index n = m.F.rows();
  const double scale = max_abs(m.F);
  if (scale <= tol) return 1;  // already the zero map
  const Eigen::MatrixXd G = m.F / scale;
  Eigen::MatrixXd power = G;
  for (Index k = 1; k <= n; ++k) {
    if (max_abs(power) <= tol) return static_cast<int>(k);
    power = power * G;
  }
  // Cayley-Hamilton: if F^N != 0 then no higher power vanishes either.
  return std::nullopt;
}

std::optional<int> depth(const LinearMachine& m, double tol) {
  const auto n = nilpotency_index(m, tol);
  if (!n) return std::nullopt;
  return *n - 1;
}

std::vector<SubspaceBasis> kernel_cofiltration(const LinearMachine& m) {
  const auto n = nilpotency_index(m);
  if (!n) throw NotNilpotent("kernel chain requires a nilpotent operator");
  const Index size = m.F.rows();

  std::vector<SubspaceBasis> chain;
  chain.reserve(static_cast<size_t>(*n) + 1);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(size, size);  // F^0
  std::vector<Eigen::MatrixXd> powers{power};
  for (int k = 1; k < *n; ++k) {
    power = power * m.F;
    powers.push_back(power);
  }
  // ker F^n is the full space, ker F^0 the zero subspace.
  chain.push_back(Eigen::MatrixXd::Identity(size, size));
  for (int k = *n - 1; k >= 1; --k) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(powers[static_cast<size_t>(k)]);
    if (lu.dimensionOfKernel() == 0)
      chain.emplace_back(size, 0);
    else
      chain.push_back(lu.kernel());
  }
  chain.emplace_back(size, 0);
  return chain;
}

Eigen::MatrixXd neumann_resolvent(const LinearMachine& m) {
  const auto n = nilpotency_index(m);
  if (!n) throw NotNilpotent("power series terminates only for nilpotent F");
  const Index size = m.F.rows();
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(size, size);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(size, size);
  for (int k = 1; k < *n; ++k) {
    term = term * m.F;
    result += term;
  }
  return result;
}

Eigen::MatrixXd solve_resolvent(const LinearMachine& m,
                                const Eigen::MatrixXd& x0) {
  require_square(m.F);
  if (x0.rows() != m.F.rows())
    throw SizeMismatch("right-hand side has " + std::to_string(x0.rows()) +
                       " rows, operator expects " + std::to_string(m.F.rows()));
  const Eigen::MatrixXd A =
      Eigen::MatrixXd::Identity(m.F.rows(), m.F.cols()) - m.F;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const double rcond = lu.rcond();
  if (!std::isfinite(rcond) || rcond < 1e-12)
    throw SingularSystem("id - F is numerically singular (rcond=" +
                         std::to_string(rcond) + ")");
  return lu.solve(x0);
}

bool is_independent(const LinearMachine& f1, const LinearMachine& f2,
                    double tol) {
  require_square(f1.F);
  require_square(f2.F);
  if (f1.F.rows() != f2.F.rows())
    throw SizeMismatch("operators act on spaces of different dimension");
  const double scale =
      std::max(1.0, max_abs(f1.F)) * std::max(1.0, max_abs(f2.F));
  return max_abs(f1.F * f2.F) <= tol * scale;
}

Eigen::MatrixXd sum_resolvent_factored(const LinearMachine& f1,
                                       const LinearMachine& f2) {
  if (!is_independent(f1, f2))
    throw NotIndependent("f1 * f2 must vanish to factor the resolvent");
  if (!nilpotency_index(f1) || !nilpotency_index(f2))
    throw NotNilpotent("both summands must be nilpotent");
  return neumann_resolvent(f2) * neumann_resolvent(f1);
}

bool dual_resolvent_check(const LinearMachine& m, double tol) {
  const Eigen::MatrixXd lhs = neumann_resolvent(m).transpose();
  const Eigen::MatrixXd rhs = neumann_resolvent({m.F.transpose()});
  return max_abs(lhs - rhs) <= tol;
}

bool contained_in_span(const SubspaceBasis& basis,
                       const Eigen::MatrixXd& vectors) {
  if (vectors.cols() == 0) return true;
  if (basis.cols() == 0) {
    for (Index j = 0; j < vectors.cols(); ++j) {
      const double norm = vectors.col(j).norm();
      if (norm > kContainmentTol) return false;
    }
    return true;
  }
  if (basis.rows() != vectors.rows())
    throw SizeMismatch("basis and vectors live in different spaces");
  const Eigen::MatrixXd coeffs = basis.colPivHouseholderQr().solve(vectors);
  const Eigen::MatrixXd residual = basis * coeffs - vectors;
  for (Index j = 0; j < vectors.cols(); ++j) {
    const double bound =
        kContainmentTol * std::max(1.0, vectors.col(j).norm());
    if (residual.col(j).norm() > bound) return false;
  }
  return true;
}

namespace {

void require_full_column_rank(const SubspaceBasis& basis, const char* which) {
  if (basis.cols() == 0) return;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  if (qr.rank() != basis.cols())
    throw RankDeficientBasis(std::string(which) +
                             " basis columns are linearly dependent");
}

}  // namespace

bool lowering_check(const LinearMachine& f, const SubspaceBasis& V,
                    const SubspaceBasis& Wsub) {
  require_square(f.F);
  require_full_column_rank(V, "source");
  require_full_column_rank(Wsub, "target");
  if (V.cols() > 0 && V.rows() != f.F.cols())
    throw SizeMismatch("source basis does not match operator size");
  if (V.cols() == 0) return true;
  return contained_in_span(Wsub, f.F * V);
}

bool verify_depth_cofiltration(const LinearMachine& f,
                               const std::vector<SubspaceBasis>& chain) {
  require_square(f.F);
  if (chain.empty()) throw ChainNotDecreasing("chain is empty");
  if (chain.back().cols() != 0)
    throw ChainNotDecreasing("chain must end in the zero subspace");
  for (size_t i = 0; i + 1 < chain.size(); ++i) {
    if (!contained_in_span(chain[i], chain[i + 1]))
      throw ChainNotDecreasing("step " + std::to_string(i + 1) +
                               " is not contained in step " +
                               std::to_string(i));
  }
  // Image condition, then one lowering step per link.
  if (!contained_in_span(chain.front(), f.F)) return false;
  for (size_t i = 1; i < chain.size(); ++i) {
    if (chain[i - 1].cols() == 0) continue;
    if (!contained_in_span(chain[i], f.F * chain[i - 1])) return false;
  }
  return true;
}

}  // namespace machines
