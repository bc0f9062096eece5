#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "asq/embedding.hpp"
#include "asq/errors.hpp"
#include "asq/sqd.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace asq;

namespace {

CIVector ground_state(const IntegralSet& ints, int na, int nb) {
    FciResult r = fci_ground_state(ints, na, nb);
    return r.state;
}

bool right_weights(const Configuration& c, int na, int nb) {
    return std::popcount(c.first) == na && std::popcount(c.second) == nb;
}

}  // namespace

TEST_CASE("bitstring packing puts beta orbitals above the alpha block") {
    CHECK(pack_configuration(0b0101, 0b0011, 4) == 0b0011'0101);
    CHECK(unpack_configuration(0b0011'0101, 4) == Configuration{0b0101, 0b0011});
    for (std::uint64_t x = 0; x < 64; ++x) {
        auto [a, b] = unpack_configuration(x, 3);
        CHECK(pack_configuration(a, b, 3) == x);
    }
}

TEST_CASE("sampling: totals, support, determinism across thread counts") {
    IntegralSet ints = fixtures::correlated(4, 4, 500);
    CIVector gs = ground_state(ints, 2, 2);

    SampleSet s1 = sample_bitstrings(gs, 20000, 7, {}, 1);
    CHECK(s1.n_orb == 4);
    CHECK(s1.n_qubits == 8);
    CHECK(s1.total_shots == 20000);
    std::uint64_t sum = 0;
    for (const auto& [str, c] : s1.counts) {
        sum += c;
        auto [a, b] = unpack_configuration(str, 4);
        // Noiseless shots land only on determinants with nonzero amplitude.
        const double amp = gs.amp(static_cast<Eigen::Index>(gs.space->index_of(a, b)));
        CHECK(std::abs(amp) > 0.0);
    }
    CHECK(sum == s1.total_shots);

    // The shard layout makes the draw independent of the thread count.
    SampleSet s4 = sample_bitstrings(gs, 20000, 7, {}, 4);
    CHECK(s4.counts == s1.counts);
    SampleSet s3 = sample_bitstrings(gs, 20000, 7, {}, 3);
    CHECK(s3.counts == s1.counts);

    // A different seed gives a different draw.
    SampleSet other = sample_bitstrings(gs, 20000, 8, {}, 1);
    CHECK(other.counts != s1.counts);

    // Frequencies approach probabilities (5-sigma cushion on the largest bin).
    auto top = std::max_element(s1.counts.begin(), s1.counts.end(),
                                [](auto& l, auto& r) { return l.second < r.second; });
    auto [ta, tb] = unpack_configuration(top->first, 4);
    const double p = std::pow(gs.amp(static_cast<Eigen::Index>(gs.space->index_of(ta, tb))), 2);
    const double sigma = std::sqrt(p * (1.0 - p) * 20000.0);
    CHECK(std::abs(static_cast<double>(top->second) - p * 20000.0) < 5.0 * sigma + 1.0);
}

TEST_CASE("sampling a basis state and flipping every qubit") {
    auto space = std::make_shared<DeterminantSpace>(3, 2, 1);
    CIVector d = CIVector::basis_state(space, 0b011, 0b100);
    SampleSet clean = sample_bitstrings(d, 500, 1);
    REQUIRE(clean.counts.size() == 1);
    CHECK(clean.counts.begin()->first == pack_configuration(0b011, 0b100, 3));
    CHECK(clean.counts.begin()->second == 500);

    SamplingNoise flip_all;
    flip_all.readout_flip = 1.0;
    SampleSet flipped = sample_bitstrings(d, 500, 1, flip_all);
    REQUIRE(flipped.counts.size() == 1);
    CHECK(flipped.counts.begin()->first == pack_configuration(0b100, 0b011, 3));

    CIVector loose = d;
    loose.amp *= 1.5;
    CHECK_THROWS_AS(sample_bitstrings(loose, 10, 1), InvalidInput);
    SamplingNoise bad;
    bad.readout_flip = 1.5;
    CHECK_THROWS_AS(sample_bitstrings(d, 10, 1, bad), InvalidInput);

    auto wide = std::make_shared<DeterminantSpace>(32, 1, 1);
    CIVector w = CIVector::basis_state(wide, 1, 1);
    CHECK_THROWS_AS(sample_bitstrings(w, 10, 1), InvalidInput);
}

TEST_CASE("amplitude noise spreads the draw but keeps it reproducible") {
    auto space = std::make_shared<DeterminantSpace>(3, 2, 1);
    CIVector d = CIVector::basis_state(space, 0b011, 0b100);
    SamplingNoise noise;
    noise.amplitude_noise = 0.5;
    SampleSet a = sample_bitstrings(d, 4000, 3, noise, 1);
    SampleSet b = sample_bitstrings(d, 4000, 3, noise, 2);
    CHECK(a.counts == b.counts);
    CHECK(a.counts.size() > 1);  // perturbation populates other determinants
}

TEST_CASE("hamming histograms bin by electron weight per block") {
    IntegralSet ints = fixtures::correlated(4, 4, 510);
    CIVector gs = ground_state(ints, 2, 2);
    SampleSet clean = sample_bitstrings(gs, 5000, 11);

    HammingHistogram h = hamming_histogram(clean);
    REQUIRE(h.total.size() == 1);  // noiseless: a single weight-4 bin
    CHECK(h.total.begin()->first == 4);
    CHECK(h.total.begin()->second.shots == 5000);
    CHECK(h.total.begin()->second.unique_strings == clean.counts.size());
    REQUIRE(h.alpha.size() == 1);
    CHECK(h.alpha.begin()->first == 2);
    REQUIRE(h.beta.size() == 1);
    CHECK(h.beta.begin()->first == 2);

    SamplingNoise noisy;
    noisy.readout_flip = 0.05;
    SampleSet dirty = sample_bitstrings(gs, 5000, 11, noisy);
    HammingHistogram hd = hamming_histogram(dirty);
    CHECK(hd.total.size() > 1);  // flips manufacture wrong-weight strings
    std::uint64_t shots = 0;
    for (const auto& [w, bin] : hd.total) shots += bin.shots;
    CHECK(shots == 5000);
}

TEST_CASE("postselection keeps exactly the right-weight strings") {
    IntegralSet ints = fixtures::correlated(4, 4, 520);
    CIVector gs = ground_state(ints, 2, 2);
    SamplingNoise noisy;
    noisy.readout_flip = 0.08;
    SampleSet dirty = sample_bitstrings(gs, 20000, 21, noisy);

    SampleSet kept = postselect(dirty, 2, 2);
    CHECK(kept.n_orb == 4);
    CHECK(kept.total_shots < dirty.total_shots);  // 0.92^8 of shots survive on average
    CHECK(kept.total_shots > 0);
    std::uint64_t sum = 0;
    for (const auto& [str, c] : kept.counts) {
        auto cfg = unpack_configuration(str, 4);
        CHECK(right_weights(cfg, 2, 2));
        CHECK(dirty.counts.at(str) == c);
        sum += c;
    }
    CHECK(sum == kept.total_shots);

    // Noiseless samples survive postselection untouched.
    SampleSet clean = sample_bitstrings(gs, 5000, 22);
    SampleSet same = postselect(clean, 2, 2);
    CHECK(same.counts == clean.counts);
    CHECK(same.total_shots == clean.total_shots);
}

TEST_CASE("configuration recovery restores the exact particle numbers") {
    IntegralSet ints = fixtures::correlated(5, 4, 530);
    CIVector gs = ground_state(ints, 2, 2);
    SamplingNoise noisy;
    noisy.readout_flip = 0.10;
    SampleSet dirty = sample_bitstrings(gs, 30000, 31, noisy);

    Occupations occ;
    occ.alpha = Eigen::VectorXd::Constant(5, 2.0 / 5.0);
    occ.beta = Eigen::VectorXd::Constant(5, 2.0 / 5.0);

    std::vector<Configuration> rec = recover_configurations(dirty, occ, 2, 2, 99);
    CHECK(!rec.empty());
    CHECK(std::is_sorted(rec.begin(), rec.end()));
    CHECK(std::adjacent_find(rec.begin(), rec.end()) == rec.end());  // unique
    for (const auto& c : rec) CHECK(right_weights(c, 2, 2));

    // Right-weight strings pass through unchanged.
    SampleSet kept = postselect(dirty, 2, 2);
    for (const auto& [str, c] : kept.counts) {
        auto cfg = unpack_configuration(str, 5);
        CHECK(std::binary_search(rec.begin(), rec.end(), cfg));
    }

    // Same seed, same result; and shot counts do not matter, only the strings.
    std::vector<Configuration> rec2 = recover_configurations(dirty, occ, 2, 2, 99);
    CHECK(rec2 == rec);
    SampleSet doubled = dirty;
    for (auto& [str, c] : doubled.counts) c *= 2;
    doubled.total_shots *= 2;
    std::vector<Configuration> rec3 = recover_configurations(doubled, occ, 2, 2, 99);
    CHECK(rec3 == rec);

    CHECK_THROWS_AS(recover_configurations(dirty, occ, 6, 2, 99), InvalidInput);
    Occupations short_occ;
    short_occ.alpha = Eigen::VectorXd::Constant(4, 0.5);
    short_occ.beta = Eigen::VectorXd::Constant(5, 0.4);
    CHECK_THROWS_AS(recover_configurations(dirty, short_occ, 2, 2, 99), InvalidInput);
}

TEST_CASE("subspace diagonalization: full sector equals the sector ground state") {
    IntegralSet ints = fixtures::correlated(4, 4, 540);
    DeterminantSpace space(4, 2, 2);
    std::vector<Configuration> all;
    for (std::size_t i = 0; i < space.dim(); ++i) all.push_back(space.determinant(i));

    SubspaceResult r = subspace_diagonalize(all, ints);
    FciResult fci = fci_ground_state(ints, 2, 2);
    CHECK(r.energy == doctest::Approx(fci.energy).epsilon(1e-10));
    CHECK(r.configs.size() == space.dim());
    CHECK(r.coeffs.size() == static_cast<Eigen::Index>(space.dim()));
    CHECK(r.occupations.alpha.sum() == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(r.occupations.beta.sum() == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(r.occupations.alpha.minCoeff() >= 0.0);
    CHECK(r.occupations.alpha.maxCoeff() <= 1.0 + 1e-12);
    CHECK(r.s_squared == doctest::Approx(fci.s_squared).epsilon(1e-8));
}

TEST_CASE("subspace diagonalization on subsets matches dense restriction") {
    IntegralSet ints = fixtures::correlated(5, 4, 550);
    DeterminantSpace space(5, 2, 2);
    Rng rng(550);
    std::vector<Configuration> subset;
    for (std::size_t i = 0; i < space.dim(); ++i)
        if (rng.uniform() < 0.35) subset.push_back(space.determinant(i));
    REQUIRE(subset.size() >= 3);

    SubspaceResult r = subspace_diagonalize(subset, ints);
    const double ref = oracles::dense_subspace_energy(ints, 2, 2, subset);
    CHECK(r.energy == doctest::Approx(ref).epsilon(1e-10));

    // The subspace energy is variational from above.
    FciResult fci = fci_ground_state(ints, 2, 2);
    CHECK(r.energy >= fci.energy - 1e-9);

    // Spin diagnostics agree with the configuration-list oracle.
    CHECK(r.s_squared ==
          doctest::Approx(s_squared(r.configs, r.coeffs, 5)).epsilon(1e-10));

    // Duplicated entries collapse; shuffled order does not matter.
    std::vector<Configuration> doubled = subset;
    doubled.insert(doubled.end(), subset.begin(), subset.end());
    std::reverse(doubled.begin(), doubled.end());
    SubspaceResult r2 = subspace_diagonalize(doubled, ints);
    CHECK(r2.configs == r.configs);
    CHECK(r2.energy == doctest::Approx(r.energy).epsilon(1e-12));

    std::vector<Configuration> mixed = subset;
    mixed.push_back({0b00111, 0b00011});  // 3 alpha electrons in a (2, 2) list
    CHECK_THROWS_AS(subspace_diagonalize(mixed, ints), InvalidInput);
    CHECK_THROWS_AS(subspace_diagonalize({}, ints), InvalidInput);
}

TEST_CASE("noiseless pipeline lands on the exact energy in round zero") {
    IntegralSet ints = fixtures::coverage_66();
    CIVector gs = ground_state(ints, 3, 3);
    SampleSet samples = sample_bitstrings(gs, 100000, 12);

    SqdOptions opts;
    opts.n_alpha = 3;
    opts.n_beta = 3;
    opts.seed = 12;
    SqdResult r = sqd_run(samples, ints, opts);

    FciResult fci = fci_ground_state(ints, 3, 3);
    REQUIRE(!r.rounds.empty());
    CHECK(!r.postselect_empty);
    CHECK(std::abs(r.rounds.front().energy - fci.energy) < 1e-9);
    CHECK(r.converged);
    CHECK(r.final_energy <= r.rounds.front().energy + 1e-12);
    CHECK(r.final_state.s_squared < 1e-8);  // singlet ground state
}

TEST_CASE("readout noise: postselection loses ground-state weight, recovery wins it back") {
    // A short hopping chain spreads the ground state over every determinant
    // with a long tail of tiny amplitudes, so a finite shot budget misses
    // some of them: postselection alone leaves a visible energy gap that
    // configuration recovery then closes.
    IntegralSet ints = fixtures::chain(6, 6, 1, 1.0, -2.0, 0.0);
    CIVector gs = ground_state(ints, 3, 3);
    SamplingNoise noise;
    noise.readout_flip = 0.02;
    SampleSet samples = sample_bitstrings(gs, 100000, 5, noise);

    SqdOptions opts;
    opts.n_alpha = 3;
    opts.n_beta = 3;
    opts.seed = 5;
    SqdResult r = sqd_run(samples, ints, opts);

    FciResult fci = fci_ground_state(ints, 3, 3);
    REQUIRE(r.rounds.size() >= 2);
    const double post_gap = (r.rounds.front().energy - fci.energy) * kj_per_mol_per_hartree;
    const double rec_gap = (r.final_energy - fci.energy) * kj_per_mol_per_hartree;

    CHECK(r.rounds.front().energy >= r.final_energy - 1e-12);
    CHECK(r.final_energy >= fci.energy - 1e-9);
    for (std::size_t i = 1; i < r.rounds.size(); ++i)
        CHECK(r.rounds[i].energy <= r.rounds[i - 1].energy + 1e-12);

    CHECK(post_gap > 0.3);  // the gap is visible...
    CHECK(rec_gap < 0.1);   // ...and recovery closes it
    CHECK(r.recovery_rounds >= 1);

    // Rerunning the whole pipeline is bit-for-bit reproducible.
    SqdResult again = sqd_run(samples, ints, opts);
    CHECK(again.final_energy == r.final_energy);
    CHECK(again.rounds.size() == r.rounds.size());
}

TEST_CASE("empty postselection falls back to uniform occupations") {
    auto space = std::make_shared<DeterminantSpace>(3, 1, 1);
    IntegralSet ints = fixtures::correlated(3, 2, 560);
    CIVector d = CIVector::basis_state(space, 0b001, 0b001);
    SamplingNoise flip_all;
    flip_all.readout_flip = 1.0;  // every string ends up with weight (2, 2)
    SampleSet samples = sample_bitstrings(d, 2000, 41, flip_all);

    SqdOptions opts;
    opts.n_alpha = 1;
    opts.n_beta = 1;
    opts.seed = 41;
    SqdResult r = sqd_run(samples, ints, opts);
    CHECK(r.postselect_empty);
    CHECK(r.postselected.total_shots == 0);
    CHECK(r.recovery_rounds >= 1);
    FciResult fci = fci_ground_state(ints, 1, 1);
    CHECK(r.final_energy >= fci.energy - 1e-9);

    SqdOptions no_rounds = opts;
    no_rounds.max_rounds = 0;
    CHECK_THROWS_AS(sqd_run(samples, ints, no_rounds), InvalidInput);

    // Register mismatch between samples and integrals is rejected.
    IntegralSet wrong = fixtures::correlated(4, 2, 561);
    CHECK_THROWS_AS(sqd_run(samples, wrong, opts), InvalidInput);
}

TEST_CASE("sample sets serialize through JSON and files") {
    IntegralSet ints = fixtures::correlated(4, 4, 570);
    CIVector gs = ground_state(ints, 2, 2);
    SampleSet s = sample_bitstrings(gs, 3000, 51);

    nlohmann::json j = sample_set_to_json(s);
    CHECK(j["n_orb"] == 4);
    CHECK(j["n_qubits"] == 8);
    for (const auto& [key, value] : j["counts"].items()) CHECK(key.size() == 8);

    SampleSet back = sample_set_from_json(j);
    CHECK(back.n_orb == s.n_orb);
    CHECK(back.n_qubits == s.n_qubits);
    CHECK(back.total_shots == s.total_shots);
    CHECK(back.counts == s.counts);

    const std::string path = "/tmp/asq_sqd_samples.json";
    save_sample_set_file(s, path);
    SampleSet from_file = sample_set_from_file(path);
    CHECK(from_file.counts == s.counts);
    std::remove(path.c_str());
    CHECK_THROWS_AS(sample_set_from_file("/tmp/asq_sqd_missing.json"), ParseError);

    nlohmann::json bad = j;
    bad["n_qubits"] = 7;
    CHECK_THROWS_AS(sample_set_from_json(bad), ParseError);
    nlohmann::json short_key = j;
    short_key["counts"]["0101"] = 3;
    CHECK_THROWS_AS(sample_set_from_json(short_key), ParseError);
}
