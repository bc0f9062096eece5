#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "asq/integrals.hpp"

namespace asq {

// Occupation bit mask of one spin channel: bit p set = spatial orbital p
// occupied.  Determinants are written in block order, all alpha creation
// operators (ascending orbital) before all beta ones; every fermionic phase
// in this code follows that convention.
using SpinString = std::uint64_t;

// Binomial coefficient with overflow detection (throws InvalidInput).
std::uint64_t binomial(int n, int k);

std::vector<int> occupied_list(SpinString mask);

// Occupation string form of a mask: character i is '1' when bit/orbital i is
// occupied (leftmost character = orbital 0).
std::string mask_to_string(SpinString mask, int n_bits);
SpinString mask_from_string(const std::string& s);

// Number of occupied orbitals strictly between p and q in the mask.
int count_between(SpinString mask, int p, int q);

// Phase (+1/-1) for moving one electron of a spin channel from orbital q to
// orbital p: parity of the occupied orbitals strictly between them.  `mask`
// is the string before the move (q occupied; p empty unless p == q).
int excitation_phase(SpinString mask, int p, int q);

// All determinants with fixed electron counts per spin in n_orb orbitals.
// Spin strings are enumerated in ascending numeric order; amplitude layout is
// row-major, index = ia * n_beta_strings() + ib.
class DeterminantSpace {
public:
    DeterminantSpace(int n_orb, int n_alpha, int n_beta,
                     std::uint64_t max_dim = 200'000'000ULL);

    int n_orb() const { return n_orb_; }
    int n_alpha() const { return n_alpha_; }
    int n_beta() const { return n_beta_; }
    std::size_t n_alpha_strings() const { return alpha_.size(); }
    std::size_t n_beta_strings() const { return beta_.size(); }
    std::size_t dim() const { return alpha_.size() * beta_.size(); }

    const std::vector<SpinString>& alpha_strings() const { return alpha_; }
    const std::vector<SpinString>& beta_strings() const { return beta_; }

    // Position of a string in its block (combinatorial rank; O(electrons)).
    std::size_t alpha_rank(SpinString s) const { return rank(s); }
    std::size_t beta_rank(SpinString s) const { return rank(s); }

    std::size_t index_of(SpinString a, SpinString b) const {
        return alpha_rank(a) * beta_.size() + beta_rank(b);
    }
    std::pair<SpinString, SpinString> determinant(std::size_t index) const {
        return {alpha_[index / beta_.size()], beta_[index % beta_.size()]};
    }

private:
    static std::size_t rank(SpinString s);

    int n_orb_, n_alpha_, n_beta_;
    std::vector<SpinString> alpha_;
    std::vector<SpinString> beta_;
};

// Amplitudes over a determinant space.  Norm is not enforced; operations that
// require a normalized state check it themselves.
struct CIVector {
    std::shared_ptr<const DeterminantSpace> space;
    Eigen::VectorXd amp;

    CIVector() = default;
    CIVector(std::shared_ptr<const DeterminantSpace> sp, Eigen::VectorXd a)
        : space(std::move(sp)), amp(std::move(a)) {}

    static CIVector zero(std::shared_ptr<const DeterminantSpace> sp) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sp->dim()));
        return CIVector(std::move(sp), std::move(a));
    }
    // Unit vector on a single determinant.
    static CIVector basis_state(std::shared_ptr<const DeterminantSpace> sp, SpinString a,
                                SpinString b);
};

// Text dump: "n_orb n_alpha n_beta" header line, then one amplitude per line
// in layout order, 17 significant digits.
void save_civector(const CIVector& v, std::ostream& out);
void save_civector_file(const CIVector& v, const std::string& path);
CIVector load_civector(std::istream& in);
CIVector load_civector_file(const std::string& path);

// One-body operator application: out = sum_ps m_ps E_ps v, with
// E_ps = sum_sigma a^+_{p sigma} a_{s sigma}.
Eigen::VectorXd apply_one_body(const DeterminantSpace& space, const Eigen::MatrixXd& m,
                               const Eigen::VectorXd& v);

// Sector Hamiltonian in substitution-list form.  Same-spin couplings
// (one-body plus same-spin two-body) are precomputed per spin block; the
// opposite-spin part is evaluated on the fly from the single-substitution
// tables.  apply() includes the scalar e_core.
class DeterminantHamiltonian {
public:
    DeterminantHamiltonian(std::shared_ptr<const DeterminantSpace> space,
                           const IntegralSet& ints);

    const DeterminantSpace& space() const { return *space_; }

    void apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
    double expectation(const Eigen::VectorXd& v) const;

    // <D|H|D> for every determinant, in layout order.
    const Eigen::VectorXd& diagonal() const { return diagonal_; }

private:
    struct Sub {  // single substitution J = p<-q applied to string I
        std::uint32_t from, to;
        std::uint16_t p, q;
        double sign;
    };
    struct Coupling {
        std::uint32_t from, to;
        double value;
    };

    static std::vector<Sub> substitutions(const std::vector<SpinString>& strings,
                                          const DeterminantSpace& space, bool alpha);
    std::vector<Coupling> same_spin_couplings(const std::vector<Sub>& subs,
                                              std::size_t n_strings,
                                              const Eigen::MatrixXd& h_eff) const;
    void build_diagonal();

    std::shared_ptr<const DeterminantSpace> space_;
    IntegralSet ints_;
    std::vector<Sub> alpha_subs_, beta_subs_;
    std::vector<std::size_t> alpha_offsets_, beta_offsets_;  // per-string ranges
    std::vector<Coupling> alpha_couplings_, beta_couplings_;
    Eigen::VectorXd diagonal_;
};

// Low-rank form of the two-electron tensor: eigendecomposition of the
// (pq),(rs) supermatrix, leaves ordered by descending |weight|.
//   (pq|rs) ~ sum_t w_t g^t_pq g^t_rs   (g^t symmetric)
// one_body folds both the bare h and the exchange-like correction
// -1/2 sum_q (pq|qs) of the *reconstructed* tensor, so expectation values of
// the factorized form equal expectation values of the Hamiltonian built from
// the reconstructed integrals.
struct DoubleFactorization {
    int n_orb = 0;
    double e_core = 0.0;
    Eigen::VectorXd weights;                // kept leaf weights (signed)
    std::vector<Eigen::MatrixXd> leaves;    // kept symmetric leaf matrices
    Eigen::MatrixXd one_body;               // effective one-body matrix
    Eigen::VectorXd spectrum;               // all n^2 supermatrix eigenvalues, |.| descending
};

// n_df < 0 or >= n^2 keeps the full rank.
DoubleFactorization double_factorize(const IntegralSet& s, int n_df = -1);

// Two-electron tensor rebuilt from the kept leaves.
EriTensor df_reconstruct(const DoubleFactorization& d);

// Frobenius norm of (exact - reconstructed) over all n^4 entries.
double df_frobenius_error(const IntegralSet& s, const DoubleFactorization& d);

// <v| H_df |v> for a normalized vector (checked within 1e-10):
//   e_core + <one-body> + 1/2 sum_t w_t ||G_t v||^2.
double df_expectation(const DoubleFactorization& d, const CIVector& v);

}  // namespace asq
