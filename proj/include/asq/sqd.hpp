#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "asq/detspace.hpp"
#include "asq/eigensolver.hpp"
#include "asq/integrals.hpp"

namespace asq {

// A determinant identified by its two spin strings.
using Configuration = std::pair<SpinString, SpinString>;

// Measured bitstrings in the blocked-spin qubit layout: qubit j < n_orb is
// alpha orbital j, qubit n_orb + j is beta orbital j.
inline std::uint64_t pack_configuration(SpinString a, SpinString b, int n_orb) {
    return a | (b << n_orb);
}
inline Configuration unpack_configuration(std::uint64_t x, int n_orb) {
    SpinString mask = (SpinString{1} << n_orb) - 1;
    return {x & mask, (x >> n_orb) & mask};
}

struct SampleSet {
    int n_orb = 0;
    int n_qubits = 0;  // = 2 * n_orb
    std::uint64_t total_shots = 0;
    std::map<std::uint64_t, std::uint64_t> counts;  // bitstring -> shots, ordered
};

// Device imperfections applied during sampling.
struct SamplingNoise {
    // Gaussian perturbation of each amplitude with width g/sqrt(dim),
    // renormalized; models coherent error in the prepared state.
    double amplitude_noise = 0.0;
    // Independent bit-flip probability per qubit per shot.
    double readout_flip = 0.0;
};

// Draw n_shots measurements from |amp|^2 of a normalized state.  The work is
// split over a fixed number of internal shards with independent seeded
// streams, so results are identical for any thread count.
SampleSet sample_bitstrings(const CIVector& v, std::uint64_t n_shots, std::uint64_t seed,
                            const SamplingNoise& noise = {}, int n_threads = 1);

// Shot and unique-string tallies keyed by total electron count (set bits);
// alpha/beta variants key on the per-spin blocks.
struct HammingBin {
    std::uint64_t unique_strings = 0;
    std::uint64_t shots = 0;
};
struct HammingHistogram {
    std::map<int, HammingBin> total;
    std::map<int, HammingBin> alpha;
    std::map<int, HammingBin> beta;
};
HammingHistogram hamming_histogram(const SampleSet& s);

// Keep only strings with exactly n_alpha set bits in the alpha block and
// n_beta in the beta block.
SampleSet postselect(const SampleSet& s, int n_alpha, int n_beta);

// Average per-orbital, per-spin occupations (values in [0, 1]).
struct Occupations {
    Eigen::VectorXd alpha, beta;
};

// Map every sampled string to a particle-number-correct configuration: in
// each spin block, surplus (deficit) bits are flipped off (on) one at a time,
// chosen without replacement with probability proportional to the deviation
// |bit - <n_p>| + delta of the candidate orbital.  Strings that already have
// the right weights pass through unchanged.  Unique strings are processed in
// ascending order, so the result is independent of shot counts and
// reproducible for a given seed.  Returns sorted unique configurations.
std::vector<Configuration> recover_configurations(const SampleSet& s, const Occupations& occ,
                                                  int n_alpha, int n_beta,
                                                  std::uint64_t seed, double delta = 1e-6);

// Rayleigh-Ritz ground state within an arbitrary configuration list
// (sorted + deduplicated internally; all entries must share the sector).
struct SubspaceResult {
    double energy = 0.0;
    std::vector<Configuration> configs;
    Eigen::VectorXd coeffs;
    Occupations occupations;
    double s_squared = 0.0;
};
SubspaceResult subspace_diagonalize(const std::vector<Configuration>& configs,
                                    const IntegralSet& ints,
                                    const DavidsonOptions& opts = {});

struct SqdOptions {
    int n_alpha = 0, n_beta = 0;
    int max_rounds = 10;        // recovery iterations
    double energy_tol = 1e-6;   // stop when consecutive round energies agree
    std::uint64_t seed = 1;
    DavidsonOptions eig;
};

struct SqdRound {
    double energy = 0.0;
    std::uint64_t dim = 0;
    double s_squared = 0.0;
};

// Full sample -> energy pipeline: postselect and diagonalize (round 0), then
// iterate configuration recovery with the current occupations, growing a
// cumulative configuration pool (so round energies never increase), until
// the energy settles or max_rounds is hit.  With an empty postselected set,
// occupations start uniform at the filling fraction.
struct SqdResult {
    SampleSet postselected;
    std::vector<SqdRound> rounds;  // rounds[0] = postselection only (when nonempty)
    bool postselect_empty = false;
    int recovery_rounds = 0;
    bool converged = false;
    double final_energy = 0.0;
    SubspaceResult final_state;
};
SqdResult sqd_run(const SampleSet& samples, const IntegralSet& ints, const SqdOptions& opts);

// JSON form of a sample set: {n_orb, n_qubits, total_shots, counts} with
// counts keyed by occupation strings (leftmost character = qubit 0).
nlohmann::json sample_set_to_json(const SampleSet& s);
SampleSet sample_set_from_json(const nlohmann::json& j);
void save_sample_set_file(const SampleSet& s, const std::string& path);
SampleSet sample_set_from_file(const std::string& path);

}  // namespace asq
