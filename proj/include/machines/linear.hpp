#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "machines/errors.hpp"

namespace machines {

/// Square linear endofunction of R^N. It is a machine exactly when
/// (I - F) is invertible, and has finite depth exactly when F is nilpotent.
struct LinearMachine {
  Eigen::MatrixXd F;
};

/// Column basis of a subspace of R^N; a zero-column matrix is the zero
/// subspace. Columns are expected to be linearly independent.
using SubspaceBasis = Eigen::MatrixXd;

/// Entries of a power of F (rescaled to unit max norm) below this are
/// treated as zero when testing nilpotency and independence.
inline constexpr double kNilpotencyTol = 1e-10;

/// Subspace containment is accepted when the least-squares residual of a
/// column stays below this times max(1, column norm).
inline constexpr double kContainmentTol = 1e-8;

/// Smallest n >= 1 with F^n = 0, or nullopt when no power up to N
/// vanishes (which is exhaustive for an NxN matrix).
std::optional<int> nilpotency_index(const LinearMachine& m,
                                    double tol = kNilpotencyTol);

/// nilpotency_index(m) - 1, or nullopt when F is not nilpotent.
std::optional<int> depth(const LinearMachine& m, double tol = kNilpotencyTol);

/// Kernel chain of a nilpotent F, largest subspace first: bases of
/// ker F^n, ker F^{n-1}, ..., ker F^0 = 0 where n is the nilpotency
/// index. Dimensions decrease strictly to zero.
std::vector<SubspaceBasis> kernel_cofiltration(const LinearMachine& m);

/// Terminating power series I + F + ... + F^{n-1}, the inverse of (I - F).
Eigen::MatrixXd neumann_resolvent(const LinearMachine& m);

/// Solve (I - F) x = x0 by a dense factorization. Accepts any
/// numerically invertible system, nilpotent or not; each column of x0 is
/// an independent right-hand side.
Eigen::MatrixXd solve_resolvent(const LinearMachine& m,
                                const Eigen::MatrixXd& x0);

/// True iff F1 * F2 = 0, i.e. f1 ignores everything f2 can output.
bool is_independent(const LinearMachine& f1, const LinearMachine& f2,
                    double tol = kNilpotencyTol);

/// Resolvent of f1 + f2 computed as the product R_{f2} * R_{f1}.
/// Requires f1 independent of f2 and both nilpotent.
Eigen::MatrixXd sum_resolvent_factored(const LinearMachine& f1,
                                       const LinearMachine& f2);

/// Transposing the resolvent must equal the resolvent of the transpose.
bool dual_resolvent_check(const LinearMachine& m, double tol = 1e-12);

/// True iff F maps span(V) into span(Wsub), certifying that F lowers to
/// a map between the corresponding quotients.
bool lowering_check(const LinearMachine& f, const SubspaceBasis& V,
                    const SubspaceBasis& Wsub);

/// Check a candidate depth cofiltration V_0 ⊇ ... ⊇ V_d = 0 for F:
/// the image of F must lie in V_0 and F must map each V_{i-1} into V_i.
bool verify_depth_cofiltration(const LinearMachine& f,
                               const std::vector<SubspaceBasis>& chain);

/// True when every column of `vectors` lies in the span of `basis` up to
/// least-squares residual kContainmentTol * max(1, column norm).
bool contained_in_span(const SubspaceBasis& basis,
                       const Eigen::MatrixXd& vectors);

}  // namespace machines
