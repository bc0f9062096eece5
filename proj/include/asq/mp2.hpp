#pragma once

#include <Eigen/Dense>
#include <vector>

#include "asq/integrals.hpp"

namespace asq {

// Second-order correlation energy of the closed-shell determinant occupying
// `occupied` (two electrons each):
//
//   E2 = sum_{ij in occ} sum_{ab in virt}
//        (ia|jb) [2 (ia|jb) - (ib|ja)] / (eps_i + eps_j - eps_a - eps_b)
//
// Requires canonical orbitals: the closed-shell Fock matrix must be diagonal
// within canon_tol (use recanonicalize() first otherwise), and the
// occupied-virtual gap must be nonzero.
double mp2_energy(const IntegralSet& s, const std::vector<int>& occupied,
                  double canon_tol = 1e-8);

// Unrelaxed second-order one-body density in the virtual-virtual block,
//   D_ab = sum_{ijc} t_ij^{ac} (4 t_ij^{bc} - 2 t_ij^{cb}),
//   t_ij^{ab} = (ia|jb) / (eps_i + eps_j - eps_a - eps_b),
// indexed by position in the virtual list (complement of `occupied`, in
// ascending orbital order).  Symmetric positive semidefinite.
Eigen::MatrixXd mp2_virtual_density(const IntegralSet& s, const std::vector<int>& occupied,
                                    double canon_tol = 1e-8);

// Natural orbitals of a (positive semidefinite) density block.
struct NaturalOrbitals {
    Eigen::MatrixXd u;             // columns = natural orbitals, descending occupation
    Eigen::VectorXd occupations;   // eigenvalues, descending
    int n_retained = 0;            // count with occupation >= threshold (ties retained)
};

NaturalOrbitals natural_orbital_truncation(const Eigen::MatrixXd& density, double threshold,
                                           double psd_tol = 1e-8);

// Correlated active space built from a parent closed-shell problem:
// freeze the non-selected occupied orbitals (mean-field folding), compute the
// second-order virtual density with the selected occupied set, truncate the
// virtual space to natural orbitals with occupation >= threshold, then
// re-canonicalize the retained orbitals (occupied and virtual blocks
// separately) so the result is again canonical.
struct ActiveSpace {
    IntegralSet integrals;            // the truncated, re-canonicalized problem
    int n_parent_orb = 0;
    int n_parent_elec = 0;
    std::vector<int> occupied_select;  // parent indices kept active
    std::vector<int> frozen;           // parent indices folded into the core
    Eigen::VectorXd no_occupations;    // all virtual natural occupations, descending
    int n_virtual_retained = 0;
    double threshold = 0.0;
    double e_hf = 0.0;          // parent closed-shell determinant energy
    double e_mp2_full = 0.0;    // correlation with every parent occupied orbital
    double e_mp2_frozen = 0.0;  // correlation with the selected occupied set, all virtuals
    double e_mp2_active = 0.0;  // correlation inside the truncated space
};

// `occupied` is the parent closed-shell occupation; `occupied_select` the
// subset kept active (the rest is frozen).  The parent Fock matrix must be
// diagonal (canonical orbitals).
ActiveSpace build_active_space(const IntegralSet& s, const std::vector<int>& occupied,
                               const std::vector<int>& occupied_select, double threshold);

}  // namespace asq
