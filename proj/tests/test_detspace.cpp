#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "asq/detspace.hpp"
#include "asq/errors.hpp"
#include "asq/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace asq;

namespace {

Eigen::VectorXd random_amp(std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
    return v;
}

// Dense matrix of sum_ps m_ps E_ps built one elementary operator at a time.
Eigen::MatrixXd dense_one_body(const DeterminantSpace& space, const Eigen::MatrixXd& m) {
    const int n = space.n_orb();
    const std::uint64_t amask = (std::uint64_t{1} << n) - 1;
    const auto dim = static_cast<Eigen::Index>(space.dim());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        const auto [a, b] = space.determinant(static_cast<std::size_t>(j));
        const std::uint64_t packed = a | (b << n);
        for (int spin = 0; spin < 2; ++spin)
            for (int p = 0; p < n; ++p)
                for (int s = 0; s < n; ++s) {
                    std::uint64_t w = packed;
                    double sign = 1.0;
                    if (!oracles::apply_op(w, s + spin * n, false, sign)) continue;
                    if (!oracles::apply_op(w, p + spin * n, true, sign)) continue;
                    const auto i =
                        static_cast<Eigen::Index>(space.index_of(w & amask, w >> n));
                    out(i, j) += sign * m(p, s);
                }
    }
    return out;
}

}  // namespace

TEST_CASE("binomial coefficients: exact values, edge cases, overflow guard") {
    CHECK(binomial(6, 3) == 20);
    CHECK(binomial(14, 7) == 3432);
    CHECK(binomial(0, 0) == 1);
    CHECK(binomial(5, 0) == 1);
    CHECK(binomial(5, 5) == 1);
    CHECK(binomial(5, 6) == 0);
    CHECK(binomial(-1, 0) == 0);
    CHECK(binomial(60, 30) == 118264581564861424ull);
    CHECK_THROWS_AS(binomial(128, 64), InvalidInput);
}

TEST_CASE("occupation masks: string form, occupied lists, between counts") {
    CHECK(mask_to_string(0b1011, 4) == "1101");
    CHECK(mask_to_string(0, 3) == "000");
    CHECK(mask_from_string("1101") == 0b1011);
    CHECK(mask_from_string("") == 0);
    CHECK_THROWS_AS(mask_from_string("10x1"), InvalidInput);
    CHECK_THROWS_AS(mask_from_string(std::string(64, '1')), InvalidInput);

    Rng rng(41);
    for (int k = 0; k < 20; ++k) {
        SpinString m = rng.below(std::uint64_t{1} << 20);
        CHECK(mask_from_string(mask_to_string(m, 20)) == m);
    }

    CHECK(occupied_list(0b10110) == std::vector<int>{1, 2, 4});
    CHECK(occupied_list(0).empty());

    CHECK(count_between(0b11111, 0, 4) == 3);
    CHECK(count_between(0b11111, 4, 0) == 3);  // order-agnostic
    CHECK(count_between(0b11111, 2, 3) == 0);
    CHECK(count_between(0b10001, 0, 4) == 0);
    CHECK(count_between(0b01110, 0, 4) == 3);
}

TEST_CASE("excitation phases count the occupied orbitals crossed") {
    CHECK(excitation_phase(0b0101, 1, 2) == 1);   // nothing between 1 and 2
    CHECK(excitation_phase(0b0111, 3, 0) == 1);   // crosses orbitals 1 and 2
    CHECK(excitation_phase(0b0011, 3, 1) == 1);   // orbital 2 is empty, no crossing
    CHECK(excitation_phase(0b0111, 3, 1) == -1);  // crosses occupied orbital 2
    CHECK(excitation_phase(0b0101, 2, 2) == 1);   // no move, no phase
}

TEST_CASE("determinant space enumeration, ranking and layout") {
    auto space = std::make_shared<DeterminantSpace>(6, 3, 3);
    CHECK(space->dim() == 400);
    CHECK(space->n_alpha_strings() == 20);
    CHECK(space->n_beta_strings() == 20);

    const auto& alpha = space->alpha_strings();
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        CHECK(std::popcount(alpha[k]) == 3);
        if (k > 0) CHECK(alpha[k] > alpha[k - 1]);  // ascending numeric order
        CHECK(space->alpha_rank(alpha[k]) == k);
    }

    // determinant() and index_of() are inverses over the whole space.
    for (std::size_t i = 0; i < space->dim(); ++i) {
        const auto [a, b] = space->determinant(i);
        CHECK(space->index_of(a, b) == i);
    }
    // Row-major layout: alpha rank is the slow index.
    CHECK(space->index_of(alpha[2], space->beta_strings()[5]) == 2 * 20 + 5);

    DeterminantSpace lopsided(5, 3, 0);
    CHECK(lopsided.dim() == 10);
    CHECK(lopsided.beta_strings().size() == 1);
    CHECK(lopsided.beta_strings()[0] == 0);

    CHECK_THROWS_AS(DeterminantSpace(0, 0, 0), InvalidInput);
    CHECK_THROWS_AS(DeterminantSpace(64, 1, 1), InvalidInput);
    CHECK_THROWS_AS(DeterminantSpace(4, 5, 0), InvalidInput);
    CHECK_THROWS_AS(DeterminantSpace(4, -1, 0), InvalidInput);
    CHECK_THROWS_AS(DeterminantSpace(20, 10, 10, 1000), InvalidInput);  // cap
}

TEST_CASE("ci vectors: basis states and text round trip") {
    auto space = std::make_shared<DeterminantSpace>(5, 2, 3);
    CIVector v = CIVector::basis_state(space, 0b00101, 0b01011);
    CHECK(v.amp.size() == static_cast<Eigen::Index>(space->dim()));
    CHECK(v.amp.sum() == 1.0);
    CHECK(v.amp(static_cast<Eigen::Index>(space->index_of(0b00101, 0b01011))) == 1.0);

    CIVector w(space, random_amp(space->dim(), 42));  // deliberately unnormalized
    std::stringstream buf;
    save_civector(w, buf);
    CIVector back = load_civector(buf);
    CHECK(back.space->n_orb() == 5);
    CHECK(back.space->n_alpha() == 2);
    CHECK(back.space->n_beta() == 3);
    REQUIRE(back.amp.size() == w.amp.size());
    for (Eigen::Index i = 0; i < w.amp.size(); ++i) CHECK(back.amp(i) == w.amp(i));

    // File round trip.
    const std::string path = "/tmp/asq_detspace_vec.txt";
    save_civector_file(w, path);
    CIVector from_file = load_civector_file(path);
    CHECK((from_file.amp - w.amp).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_civector_file("/tmp/asq_detspace_missing.txt"), ParseError);

    std::stringstream bad_header("5 2\n");
    CHECK_THROWS_AS(load_civector(bad_header), ParseError);
    std::stringstream truncated("2 1 1\n0.5\n0.5\n0.5\n");  // needs 4 amplitudes
    CHECK_THROWS_AS(load_civector(truncated), ParseError);
    std::stringstream trailing("2 1 1\n0.5\n0.5\n0.5\n0.5\n0.125\n");
    CHECK_THROWS_AS(load_civector(trailing), ParseError);
}

TEST_CASE("one-body application matches the elementary-operator oracle") {
    for (auto [n, na, nb] : {std::array<int, 3>{4, 2, 2}, {5, 3, 2}, {4, 2, 0}}) {
        DeterminantSpace space(n, na, nb);
        Rng rng(50 + n);
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = rng.normal();  // not symmetric

        Eigen::MatrixXd dense = dense_one_body(space, m);
        Eigen::VectorXd v = random_amp(space.dim(), 60 + static_cast<std::uint64_t>(n));
        Eigen::VectorXd lib = apply_one_body(space, m, v);
        CHECK((lib - dense * v).cwiseAbs().maxCoeff() < 1e-12);
    }

    DeterminantSpace space(4, 2, 2);
    CHECK_THROWS_AS(apply_one_body(space, Eigen::MatrixXd::Zero(3, 3),
                                   Eigen::VectorXd::Zero(36)),
                    InvalidInput);
    CHECK_THROWS_AS(apply_one_body(space, Eigen::MatrixXd::Zero(4, 4),
                                   Eigen::VectorXd::Zero(35)),
                    InvalidInput);
}

TEST_CASE("sector hamiltonian reproduces the dense operator oracle") {
    struct Sector {
        int n, na, nb;
        std::uint64_t seed;
    };
    for (auto [n, na, nb, seed] : {Sector{4, 2, 2, 70}, {5, 3, 2, 71}, {4, 2, 0, 72}}) {
        IntegralSet ints = fixtures::correlated(n, na + nb, seed);
        auto space = std::make_shared<DeterminantSpace>(n, na, nb);
        DeterminantHamiltonian ham(space, ints);
        Eigen::MatrixXd dense = oracles::dense_hamiltonian(ints, na, nb);

        const auto dim = static_cast<Eigen::Index>(space->dim());
        Eigen::MatrixXd rebuilt(dim, dim);
        for (Eigen::Index j = 0; j < dim; ++j)
            rebuilt.col(j) = ham.apply(Eigen::VectorXd::Unit(dim, j));
        CHECK((rebuilt - dense).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((ham.diagonal() - dense.diagonal()).cwiseAbs().maxCoeff() < 1e-12);

        Eigen::VectorXd v = random_amp(space->dim(), seed);
        CHECK(ham.expectation(v) == doctest::Approx(v.dot(dense * v)).epsilon(1e-12));
    }
}

TEST_CASE("scalar core energy enters only the diagonal") {
    IntegralSet ints = fixtures::correlated(4, 4, 73);
    auto space = std::make_shared<DeterminantSpace>(4, 2, 2);
    DeterminantHamiltonian ham(space, ints);
    IntegralSet shifted = ints;
    shifted.e_core += 0.7;
    DeterminantHamiltonian ham2(space, shifted);

    Eigen::VectorXd v = random_amp(space->dim(), 73);
    Eigen::VectorXd d = ham2.apply(v) - ham.apply(v) - 0.7 * v;
    CHECK(d.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("double factorization: spectrum, reconstruction, truncation error") {
    // Purely on-site repulsion has exactly n nonzero supermatrix eigenvalues.
    IntegralSet onsite = fixtures::onsite(4, 4, 80);
    DoubleFactorization donsite = double_factorize(onsite);
    REQUIRE(donsite.spectrum.size() == 16);
    int nonzero = 0;
    for (Eigen::Index t = 0; t < 16; ++t)
        if (std::abs(donsite.spectrum(t)) > 1e-12) ++nonzero;
    CHECK(nonzero == 4);

    IntegralSet s = fixtures::correlated(4, 4, 81);
    DoubleFactorization full = double_factorize(s);  // full rank by default
    CHECK(full.weights.size() == 16);
    for (Eigen::Index t = 0; t + 1 < full.weights.size(); ++t)
        CHECK(std::abs(full.weights(t)) >= std::abs(full.weights(t + 1)));
    for (const auto& g : full.leaves)
        CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-12);

    // Full-rank reconstruction is exact entry by entry.
    EriTensor rec = df_reconstruct(full);
    double max_err = 0.0;
    for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q)
            for (int r = 0; r < 4; ++r)
                for (int t = 0; t < 4; ++t)
                    max_err = std::max(max_err,
                                       std::abs(rec(p, q, r, t) - s.eri(p, q, r, t)));
    CHECK(max_err < 1e-12);
    CHECK(df_frobenius_error(s, full) < 1e-10);

    // At full rank the effective one-body matrix is h minus the exchange fold.
    for (int p = 0; p < 4; ++p)
        for (int t = 0; t < 4; ++t) {
            double fold = 0.0;
            for (int q = 0; q < 4; ++q) fold += s.eri(p, q, q, t);
            CHECK(full.one_body(p, t) ==
                  doctest::Approx(s.h(p, t) - 0.5 * fold).epsilon(1e-10));
        }

    // Truncation error equals the norm of the dropped spectrum tail, and the
    // sweep over every rank is non-increasing.
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 16; ++k) {
        DoubleFactorization dk = double_factorize(s, k);
        CHECK(dk.weights.size() == k);
        double tail = 0.0;
        for (Eigen::Index t = k; t < 16; ++t) tail += dk.spectrum(t) * dk.spectrum(t);
        double err = df_frobenius_error(s, dk);
        CHECK(err == doctest::Approx(std::sqrt(tail)).epsilon(1e-9));
        CHECK(err <= previous + 1e-12);
        previous = err;
    }
}

TEST_CASE("factorized expectation values match the reconstructed hamiltonian") {
    IntegralSet s = fixtures::correlated(4, 4, 82);
    auto space = std::make_shared<DeterminantSpace>(4, 2, 2);
    Eigen::VectorXd amp = random_amp(space->dim(), 82);
    amp.normalize();
    CIVector v(space, amp);

    DoubleFactorization full = double_factorize(s);
    DeterminantHamiltonian ham(space, s);
    CHECK(df_expectation(full, v) == doctest::Approx(ham.expectation(amp)).epsilon(1e-10));

    for (int k : {2, 5, 9, 13}) {
        DoubleFactorization dk = double_factorize(s, k);
        IntegralSet rec = s;
        rec.eri = df_reconstruct(dk);
        DeterminantHamiltonian ham_rec(space, rec);
        CHECK(df_expectation(dk, v) ==
              doctest::Approx(ham_rec.expectation(amp)).epsilon(1e-10));
    }

    CIVector loose(space, 2.0 * amp);
    DoubleFactorization d2 = double_factorize(s, 5);
    CHECK_THROWS_AS(df_expectation(d2, loose), InvalidInput);
}
