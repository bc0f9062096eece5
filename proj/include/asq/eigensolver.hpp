#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "asq/detspace.hpp"
#include "asq/integrals.hpp"

namespace asq {

struct DavidsonOptions {
    double tol = 1e-9;      // residual 2-norm target
    int max_iter = 200;
    int max_subspace = 20;  // collapse threshold
};

struct EigenResult {
    double energy = 0.0;
    Eigen::VectorXd vector;
    double residual = 0.0;
    int iterations = 0;
};

// Lowest eigenpair of a symmetric operator given only its action and
// diagonal (for the preconditioner).  Deterministic: fixed restart rule,
// fixed default guess (unit vector at the smallest diagonal entry), and the
// returned vector is sign-fixed so its first strictly-largest-|amplitude|
// entry is positive.  Throws ConvergenceError when max_iter is exhausted.
//
// Caveat: the default guess spans only its own invariant subspace, so for a
// reducible operator (e.g. a Hamiltonian with uncoupled symmetry blocks) it
// finds the lowest eigenvalue of one block.  Callers that cannot rule out
// reducibility should pass broad_davidson_guess(diagonal) instead.
EigenResult davidson_lowest(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply,
    Eigen::Index dim, const Eigen::VectorXd& diagonal,
    Eigen::VectorXd guess = Eigen::VectorXd(), const DavidsonOptions& opts = {});

// Lowest-diagonal basis state plus a small uniform admixture, normalized:
// overlaps every basis state, hence every invariant subspace.
Eigen::VectorXd broad_davidson_guess(const Eigen::VectorXd& diagonal);

// Apply the same sign convention davidson_lowest uses.
void fix_global_sign(Eigen::VectorXd& v);

struct FciResult {
    double energy = 0.0;
    CIVector state;
    double residual = 0.0;
    int iterations = 0;
    double s_squared = 0.0;
};

// Ground state of the (n_alpha, n_beta) sector of the given integrals.
FciResult fci_ground_state(const IntegralSet& ints, int n_alpha, int n_beta,
                           const DavidsonOptions& opts = {});

// Total-spin expectation <S^2> = ||S+ v||^2 + Sz (Sz + 1).  The raised state
// is accumulated determinant-by-determinant in a map, so this works for any
// list of configurations, not just full sectors.
double s_squared(const CIVector& v);
double s_squared(const std::vector<std::pair<SpinString, SpinString>>& dets,
                 const Eigen::VectorXd& coeffs, int n_orb);

}  // namespace asq
