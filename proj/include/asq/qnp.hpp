#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asq/detspace.hpp"
#include "asq/optimize.hpp"
#include "asq/rng.hpp"

namespace asq {

// One two-orbital block of the ansatz: a spin-summed orbital (Givens)
// rotation by phi followed by a diagonal pair exchange by theta.  Each of the
// two elementary gates carries one parameter and its own enabled flag so they
// can be pruned independently; a disabled gate is the identity.
struct QnpGate {
    int layer = 0;
    int p = 0, q = 0;  // orbital pair, p < q
    double phi = 0.0;
    double theta = 0.0;
    bool phi_enabled = true;
    bool theta_enabled = true;
};

// A brickwork fabric of such blocks over a reference determinant.
struct QnpFabric {
    int n_orb = 0;
    int n_layers = 0;
    SpinString ref_alpha = 0, ref_beta = 0;
    std::vector<QnpGate> gates;  // application order
};

// Brickwork layout: per layer, blocks on even pairs (0,1), (2,3), ... then on
// odd pairs (1,2), (3,4), ...; n_orb - 1 blocks per layer, giving
// 2 (n_orb - 1) n_layers parameters when everything is enabled.
QnpFabric make_brick_fabric(int n_orb, int n_layers, SpinString ref_alpha,
                            SpinString ref_beta);

int block_count(const QnpFabric& f);      // blocks with at least one live gate
int gate_count(const QnpFabric& f);       // enabled elementary gates
int parameter_count(const QnpFabric& f);  // == gate_count (one angle each)

// Hardware-cost metadata: CNOT counts of the standard circuit decompositions
// of the two elementary gates.  The simulator acts on determinant sectors
// directly, so these enter reports only, never the dynamics.
inline constexpr int cnots_per_orbital_rotation = 4;
inline constexpr int cnots_per_pair_exchange = 13;

// Decomposition cost of the enabled gates.
int cnot_estimate(const QnpFabric& f);

// Angles of the enabled elementary gates in application order (phi before
// theta within a block).
Eigen::VectorXd get_parameters(const QnpFabric& f);
void set_parameters(QnpFabric& f, const Eigen::VectorXd& params);
void randomize_parameters(QnpFabric& f, Rng& rng, double scale);

// Elementary gate actions on a sector amplitude vector (in place).  Both are
// orthogonal, spin-adapted, and particle-number conserving.
//
// Orbital rotation: exp(phi/2 sum_sigma (a+_q a_p - a+_p a_q)), a Givens
// rotation between orbitals p and q applied to each spin channel.
void apply_orbital_rotation(const DeterminantSpace& space, int p, int q, double phi,
                            Eigen::VectorXd& v);
// Pair exchange: exp(theta/2 (P+_q P_p - P+_p P_q)) with P+_p creating a
// doubly occupied p; rotates |..pp..> toward |..qq..> and leaves singly
// occupied configurations alone.
void apply_pair_exchange(const DeterminantSpace& space, int p, int q, double theta,
                         Eigen::VectorXd& v);
// Generator actions w = K v (where the gate is exp(angle/2 K)); used for
// analytic gradients.
void apply_orbital_rotation_generator(const DeterminantSpace& space, int p, int q,
                                      const Eigen::VectorXd& v, Eigen::VectorXd& w);
void apply_pair_exchange_generator(const DeterminantSpace& space, int p, int q,
                                   const Eigen::VectorXd& v, Eigen::VectorXd& w);

// Apply the whole fabric to its reference determinant.  The sector of the
// returned vector is fixed by the reference occupations; norm is preserved.
CIVector prepare_state(const QnpFabric& f, std::shared_ptr<const DeterminantSpace> space);
CIVector prepare_state(const QnpFabric& f);

// Sector Hamiltonian action used by the optimizers.
using HamApply = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Energy and analytic parameter gradient at the fabric's current angles via
// one forward sweep and one adjoint (reverse) sweep.
double fabric_energy(const QnpFabric& f, const DeterminantSpace& space,
                     const HamApply& ham);
double fabric_energy_gradient(const QnpFabric& f, const DeterminantSpace& space,
                              const HamApply& ham, Eigen::VectorXd& grad);

struct VqeResult {
    QnpFabric fabric;
    double energy = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::vector<double> trace;  // energy after each optimizer iteration
};

// Local relaxation of all enabled angles by conjugate gradient.
VqeResult vqe_minimize(const QnpFabric& start, const HamApply& ham,
                       const CgOptions& opts = {});

struct BasinHoppingOptions {
    int n_hops = 10;
    double perturb_scale = 0.5;
    double temperature = 0.008;  // roughly five times chemical accuracy
    CgOptions loose{1e-4, 1e-8, 200};
    CgOptions tight{1e-8, 0.0, 1000};
    std::uint64_t seed = 1;
};

struct BasinHoppingResult {
    QnpFabric fabric;
    double energy = 0.0;
    int accepted = 0;
    int evaluations = 0;
    std::vector<double> hop_energies;
    std::vector<double> final_trace;  // energies along the tight re-relaxation
};

// Global search over the angle landscape: repeated jump + relax with
// Metropolis acceptance, then a tight relaxation of the best minimum.
BasinHoppingResult basin_hopping(const QnpFabric& start, const HamApply& ham,
                                 const BasinHoppingOptions& opts = {});

struct PruneOptions {
    double eps_param = 1e-4;   // phase 1: drop gates with |angle| below this
    double eps_energy = 1e-7;  // phase 2: drop gates whose removal shifts E less
};

struct PruneResult {
    QnpFabric fabric;
    double energy = 0.0;           // energy of the pruned fabric
    int gates_before = 0;
    int gates_after = 0;
    int removed_small_angle = 0;   // phase 1
    int removed_low_impact = 0;    // phase 2
};

// Two-phase gate removal: first all enabled elementary gates with
// |angle| < eps_param, then greedy sweeps disabling any gate whose removal
// changes the energy by less than eps_energy (re-evaluated after every
// removal, repeated until a full sweep removes nothing).
PruneResult prune_gates(const QnpFabric& f, const HamApply& ham,
                        const PruneOptions& opts = {});

// JSON form: {n_orb, n_layers, reference: {alpha, beta}, gates: [...]} with
// occupation strings written leftmost-character = orbital 0.  Each gate
// record carries layer, pair, phi, theta, enabled plus the per-gate flags
// phi_enabled/theta_enabled (absent flags default to the block's enabled).
nlohmann::json fabric_to_json(const QnpFabric& f);
QnpFabric fabric_from_json(const nlohmann::json& j);
void save_fabric_file(const QnpFabric& f, const std::string& path);
QnpFabric load_fabric_file(const std::string& path);

}  // namespace asq
