#include "asq/detspace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "asq/errors.hpp"

namespace asq {

std::uint64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
        if (r > (~std::uint64_t{0}) / num)
            throw InvalidInput("binomial: value exceeds 64-bit range");
        r = r * num / i;  // exact: r*(n-k+i) is divisible by i at this point
    }
    return r;
}

std::vector<int> occupied_list(SpinString mask) {
    std::vector<int> occ;
    while (mask) {
        int p = std::countr_zero(mask);
        occ.push_back(p);
        mask &= mask - 1;
    }
    return occ;
}

std::string mask_to_string(SpinString mask, int n_bits) {
    std::string s(static_cast<std::size_t>(n_bits), '0');
    for (int i = 0; i < n_bits; ++i)
        if (mask & (SpinString{1} << i)) s[static_cast<std::size_t>(i)] = '1';
    return s;
}

SpinString mask_from_string(const std::string& s) {
    if (s.size() > 63) throw InvalidInput("occupation string longer than 63 bits");
    SpinString m = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '1')
            m |= SpinString{1} << i;
        else if (s[i] != '0')
            throw InvalidInput("occupation string must contain only '0' and '1'");
    }
    return m;
}

int count_between(SpinString mask, int p, int q) {
    int lo = std::min(p, q), hi = std::max(p, q);
    if (hi - lo < 2) return 0;
    SpinString range = ((SpinString{1} << hi) - 1) & ~((SpinString{1} << (lo + 1)) - 1);
    return std::popcount(mask & range);
}

int excitation_phase(SpinString mask, int p, int q) {
    return count_between(mask, p, q) % 2 == 0 ? 1 : -1;
}

std::size_t DeterminantSpace::rank(SpinString s) {
    // Combinatorial (colex) rank; equals the position in ascending numeric
    // order among strings of the same popcount.
    std::size_t r = 0;
    int i = 0;
    while (s) {
        int p = std::countr_zero(s);
        r += binomial(p, i + 1);
        s &= s - 1;
        ++i;
    }
    return r;
}

namespace {

std::vector<SpinString> enumerate_strings(int n_orb, int k) {
    std::uint64_t count = binomial(n_orb, k);
    std::vector<SpinString> out;
    out.reserve(count);
    SpinString s = k == 0 ? 0 : (SpinString{1} << k) - 1;
    out.push_back(s);
    for (std::uint64_t i = 1; i < count; ++i) {
        SpinString u = s & (~s + 1);
        SpinString v = s + u;
        s = v | (((s ^ v) / u) >> 2);
        out.push_back(s);
    }
    return out;
}

}  // namespace

DeterminantSpace::DeterminantSpace(int n_orb, int n_alpha, int n_beta, std::uint64_t max_dim)
    : n_orb_(n_orb), n_alpha_(n_alpha), n_beta_(n_beta) {
    if (n_orb < 1 || n_orb > 63)
        throw InvalidInput("determinant space: n_orb must be in [1, 63]");
    if (n_alpha < 0 || n_alpha > n_orb || n_beta < 0 || n_beta > n_orb)
        throw InvalidInput("determinant space: electron counts out of range");
    std::uint64_t na = binomial(n_orb, n_alpha);
    std::uint64_t nb = binomial(n_orb, n_beta);
    if (nb != 0 && na > max_dim / nb)
        throw InvalidInput("determinant space: dimension " + std::to_string(na) + " x " +
                           std::to_string(nb) + " exceeds cap " + std::to_string(max_dim));
    alpha_ = enumerate_strings(n_orb, n_alpha);
    beta_ = enumerate_strings(n_orb, n_beta);
}

CIVector CIVector::basis_state(std::shared_ptr<const DeterminantSpace> sp, SpinString a,
                               SpinString b) {
    CIVector v = CIVector::zero(std::move(sp));
    v.amp(static_cast<Eigen::Index>(v.space->index_of(a, b))) = 1.0;
    return v;
}

void save_civector(const CIVector& v, std::ostream& out) {
    out << v.space->n_orb() << ' ' << v.space->n_alpha() << ' ' << v.space->n_beta() << '\n';
    char buf[40];
    for (Eigen::Index i = 0; i < v.amp.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", v.amp(i));
        out << buf;
    }
}

void save_civector_file(const CIVector& v, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    save_civector(v, out);
}

CIVector load_civector(std::istream& in) {
    int n_orb, na, nb;
    if (!(in >> n_orb >> na >> nb))
        throw ParseError("state vector: malformed header (expected 'n_orb n_alpha n_beta')");
    auto space = std::make_shared<DeterminantSpace>(n_orb, na, nb);
    CIVector v = CIVector::zero(space);
    for (Eigen::Index i = 0; i < v.amp.size(); ++i)
        if (!(in >> v.amp(i)))
            throw ParseError("state vector: expected " + std::to_string(v.amp.size()) +
                             " amplitudes");
    double extra;
    if (in >> extra) throw ParseError("state vector: trailing data after amplitudes");
    return v;
}

CIVector load_civector_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open state vector file: " + path);
    return load_civector(in);
}

namespace {

// Single substitutions of one spin block: for every string I and orbital pair
// (p <- q) with q occupied and p empty (or p == q), the target string, its
// rank and the fermionic phase.
struct SubEntry {
    std::uint32_t from, to;
    std::uint16_t p, q;
    double sign;
};

void build_substitutions(const std::vector<SpinString>& strings, int n_orb,
                         std::vector<SubEntry>& subs, std::vector<std::size_t>& offsets,
                         const DeterminantSpace& space, bool alpha) {
    subs.clear();
    offsets.assign(strings.size() + 1, 0);
    for (std::size_t i = 0; i < strings.size(); ++i) {
        offsets[i] = subs.size();
        SpinString m = strings[i];
        for (int q : occupied_list(m)) {
            for (int p = 0; p < n_orb; ++p) {
                if (p == q) {
                    subs.push_back({static_cast<std::uint32_t>(i),
                                    static_cast<std::uint32_t>(i),
                                    static_cast<std::uint16_t>(p),
                                    static_cast<std::uint16_t>(q), 1.0});
                    continue;
                }
                if (m & (SpinString{1} << p)) continue;
                SpinString m2 = (m ^ (SpinString{1} << q)) | (SpinString{1} << p);
                std::size_t j = alpha ? space.alpha_rank(m2) : space.beta_rank(m2);
                subs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                static_cast<std::uint16_t>(p), static_cast<std::uint16_t>(q),
                                static_cast<double>(excitation_phase(m, p, q))});
            }
        }
    }
    offsets[strings.size()] = subs.size();
}

}  // namespace

Eigen::VectorXd apply_one_body(const DeterminantSpace& space, const Eigen::MatrixXd& m,
                               const Eigen::VectorXd& v) {
    if (m.rows() != space.n_orb() || m.cols() != space.n_orb())
        throw InvalidInput("apply_one_body: matrix has wrong shape");
    if (v.size() != static_cast<Eigen::Index>(space.dim()))
        throw InvalidInput("apply_one_body: vector has wrong dimension");
    const Eigen::Index nb = static_cast<Eigen::Index>(space.n_beta_strings());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());

    std::vector<SubEntry> subs;
    std::vector<std::size_t> offsets;
    build_substitutions(space.alpha_strings(), space.n_orb(), subs, offsets, space, true);
    for (const SubEntry& s : subs) {
        double c = m(s.p, s.q) * s.sign;
        if (c != 0.0)
            out.segment(static_cast<Eigen::Index>(s.to) * nb, nb) +=
                c * v.segment(static_cast<Eigen::Index>(s.from) * nb, nb);
    }
    build_substitutions(space.beta_strings(), space.n_orb(), subs, offsets, space, false);
    const Eigen::Index na = static_cast<Eigen::Index>(space.n_alpha_strings());
    for (const SubEntry& s : subs) {
        double c = m(s.p, s.q) * s.sign;
        if (c == 0.0) continue;
        for (Eigen::Index ia = 0; ia < na; ++ia)
            out(ia * nb + s.to) += c * v(ia * nb + s.from);
    }
    return out;
}

std::vector<DeterminantHamiltonian::Sub> DeterminantHamiltonian::substitutions(
    const std::vector<SpinString>& strings, const DeterminantSpace& space, bool alpha) {
    std::vector<SubEntry> raw;
    std::vector<std::size_t> offsets;
    build_substitutions(strings, space.n_orb(), raw, offsets, space, alpha);
    std::vector<Sub> subs(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        subs[i] = {raw[i].from, raw[i].to, raw[i].p, raw[i].q, raw[i].sign};
    return subs;
}

std::vector<DeterminantHamiltonian::Coupling> DeterminantHamiltonian::same_spin_couplings(
    const std::vector<Sub>& subs, std::size_t n_strings, const Eigen::MatrixXd& h_eff) const {
    // Offsets of each string's substitution range (subs are grouped by 'from').
    std::vector<std::size_t> offsets(n_strings + 1, 0);
    for (const Sub& s : subs) ++offsets[s.from + 1];
    for (std::size_t i = 0; i < n_strings; ++i) offsets[i + 1] += offsets[i];

    std::map<std::uint64_t, double> acc;
    auto key = [n_strings](std::uint32_t from, std::uint32_t to) {
        return static_cast<std::uint64_t>(from) * n_strings + to;
    };
    for (const Sub& s : subs) {
        // One-body part with the exchange-like correction folded in.
        double c1 = h_eff(s.p, s.q) * s.sign;
        if (c1 != 0.0) acc[key(s.from, s.to)] += c1;
        // Same-spin two-body: second substitution applied on top of the first.
        for (std::size_t k = offsets[s.to]; k < offsets[s.to + 1]; ++k) {
            const Sub& s2 = subs[k];
            double c2 = 0.5 * ints_.eri(s2.p, s2.q, s.p, s.q) * s.sign * s2.sign;
            if (c2 != 0.0) acc[key(s.from, s2.to)] += c2;
        }
    }
    std::vector<Coupling> out;
    out.reserve(acc.size());
    for (const auto& [k, v] : acc)
        if (v != 0.0)
            out.push_back({static_cast<std::uint32_t>(k / n_strings),
                           static_cast<std::uint32_t>(k % n_strings), v});
    return out;
}

DeterminantHamiltonian::DeterminantHamiltonian(std::shared_ptr<const DeterminantSpace> space,
                                               const IntegralSet& ints)
    : space_(std::move(space)), ints_(ints) {
    if (ints_.n_orb != space_->n_orb())
        throw InvalidInput("determinant Hamiltonian: orbital count mismatch");

    alpha_subs_ = substitutions(space_->alpha_strings(), *space_, true);
    beta_subs_ = substitutions(space_->beta_strings(), *space_, false);

    auto make_offsets = [](const std::vector<Sub>& subs, std::size_t n,
                           std::vector<std::size_t>& off) {
        off.assign(n + 1, 0);
        for (const Sub& s : subs) ++off[s.from + 1];
        for (std::size_t i = 0; i < n; ++i) off[i + 1] += off[i];
    };
    make_offsets(alpha_subs_, space_->n_alpha_strings(), alpha_offsets_);
    make_offsets(beta_subs_, space_->n_beta_strings(), beta_offsets_);

    // h_eff_ps = h_ps - 1/2 sum_q (pq|qs): the reordering term from writing
    // the two-body operator as a product of spin-summed substitutions.
    const int n = ints_.n_orb;
    Eigen::MatrixXd h_eff = ints_.h;
    for (int p = 0; p < n; ++p)
        for (int s = 0; s < n; ++s) {
            double c = 0.0;
            for (int q = 0; q < n; ++q) c += ints_.eri(p, q, q, s);
            h_eff(p, s) -= 0.5 * c;
        }
    alpha_couplings_ = same_spin_couplings(alpha_subs_, space_->n_alpha_strings(), h_eff);
    beta_couplings_ = same_spin_couplings(beta_subs_, space_->n_beta_strings(), h_eff);
    build_diagonal();
}

void DeterminantHamiltonian::build_diagonal() {
    const std::size_t na = space_->n_alpha_strings();
    const std::size_t nb = space_->n_beta_strings();
    const int n = ints_.n_orb;
    diagonal_.resize(static_cast<Eigen::Index>(na * nb));

    // Per-string one-spin energies and the per-string Coulomb field
    // w_b[p] = sum_{q in b} (pp|qq).
    auto spin_energy = [&](SpinString m) {
        double e = 0.0;
        auto occ = occupied_list(m);
        for (int p : occ) e += ints_.h(p, p);
        for (int p : occ)
            for (int q : occ) e += 0.5 * (ints_.eri(p, p, q, q) - ints_.eri(p, q, q, p));
        return e;
    };
    std::vector<double> ea(na), eb(nb);
    for (std::size_t i = 0; i < na; ++i) ea[i] = spin_energy(space_->alpha_strings()[i]);
    for (std::size_t i = 0; i < nb; ++i) eb[i] = spin_energy(space_->beta_strings()[i]);
    std::vector<double> field(nb * static_cast<std::size_t>(n));
    for (std::size_t ib = 0; ib < nb; ++ib) {
        auto occ = occupied_list(space_->beta_strings()[ib]);
        for (int p = 0; p < n; ++p) {
            double c = 0.0;
            for (int q : occ) c += ints_.eri(p, p, q, q);
            field[ib * n + p] = c;
        }
    }
    for (std::size_t ia = 0; ia < na; ++ia) {
        auto occ_a = occupied_list(space_->alpha_strings()[ia]);
        for (std::size_t ib = 0; ib < nb; ++ib) {
            double cross = 0.0;
            for (int p : occ_a) cross += field[ib * n + p];
            diagonal_(static_cast<Eigen::Index>(ia * nb + ib)) =
                ints_.e_core + ea[ia] + eb[ib] + cross;
        }
    }
}

void DeterminantHamiltonian::apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    const Eigen::Index dim = static_cast<Eigen::Index>(space_->dim());
    if (v.size() != dim) throw InvalidInput("determinant Hamiltonian: wrong vector dimension");
    const Eigen::Index na = static_cast<Eigen::Index>(space_->n_alpha_strings());
    const Eigen::Index nb = static_cast<Eigen::Index>(space_->n_beta_strings());
    out = ints_.e_core * v;

    for (const Coupling& c : alpha_couplings_)
        out.segment(static_cast<Eigen::Index>(c.to) * nb, nb) +=
            c.value * v.segment(static_cast<Eigen::Index>(c.from) * nb, nb);
    for (const Coupling& c : beta_couplings_)
        for (Eigen::Index ia = 0; ia < na; ++ia)
            out(ia * nb + c.to) += c.value * v(ia * nb + c.from);

    // Opposite-spin part: product of single substitutions with the full
    // two-electron coefficient.
    for (const Sub& sa : alpha_subs_) {
        const Eigen::Index to_base = static_cast<Eigen::Index>(sa.to) * nb;
        const Eigen::Index from_base = static_cast<Eigen::Index>(sa.from) * nb;
        for (const Sub& sb : beta_subs_) {
            double c = ints_.eri(sa.p, sa.q, sb.p, sb.q) * sa.sign * sb.sign;
            if (c != 0.0) out(to_base + sb.to) += c * v(from_base + sb.from);
        }
    }
}

Eigen::VectorXd DeterminantHamiltonian::apply(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out;
    apply(v, out);
    return out;
}

double DeterminantHamiltonian::expectation(const Eigen::VectorXd& v) const {
    return v.dot(apply(v));
}

DoubleFactorization double_factorize(const IntegralSet& s, int n_df) {
    const int n = s.n_orb;
    const int n2 = n * n;
    Eigen::MatrixXd super(n2, n2);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int t = 0; t < n; ++t) super(p * n + q, r * n + t) = s.eri(p, q, r, t);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(super);
    if (es.info() != Eigen::Success)
        throw ConvergenceError("double_factorize: supermatrix eigensolver failed", 0.0, 0.0, 0);

    // Order leaves by decreasing |weight|; stable for reproducibility.
    std::vector<int> order(n2);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
    });

    DoubleFactorization d;
    d.n_orb = n;
    d.e_core = s.e_core;
    d.spectrum.resize(n2);
    for (int t = 0; t < n2; ++t) d.spectrum(t) = es.eigenvalues()(order[t]);

    int keep = (n_df < 0 || n_df > n2) ? n2 : n_df;
    d.weights.resize(keep);
    d.leaves.reserve(keep);
    for (int t = 0; t < keep; ++t) {
        d.weights(t) = es.eigenvalues()(order[t]);
        Eigen::MatrixXd g(n, n);
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) g(p, q) = es.eigenvectors()(p * n + q, order[t]);
        g = 0.5 * (g + g.transpose()).eval();  // exact for nonzero weights
        // Deterministic sign: first largest-|entry| positive.
        int bp = 0, bq = 0;
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q)
                if (std::abs(g(p, q)) > std::abs(g(bp, bq))) {
                    bp = p;
                    bq = q;
                }
        if (g(bp, bq) < 0.0) g *= -1.0;
        d.leaves.push_back(std::move(g));
    }

    // Effective one-body term: bare h plus the reordering correction
    // -1/2 sum_q (pq|qs) evaluated with the *reconstructed* two-body tensor.
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    for (int t = 0; t < keep; ++t) k += d.weights(t) * d.leaves[t] * d.leaves[t];
    d.one_body = s.h - 0.5 * k;
    return d;
}

EriTensor df_reconstruct(const DoubleFactorization& d) {
    const int n = d.n_orb;
    EriTensor eri(n);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n * n, n * n);
    for (Eigen::Index t = 0; t < d.weights.size(); ++t) {
        Eigen::Map<const Eigen::VectorXd> g(d.leaves[t].data(), n * n);
        m += d.weights(t) * g * g.transpose();
    }
    // m is indexed by column-major vec of the symmetric leaves; since each
    // leaf is symmetric the (p*n+q) and (q*n+p) slots agree, so reading with
    // row-major composite indices is equivalent.
    for (int p = 0; p < n; ++p)
        for (int q = 0; q <= p; ++q)
            for (int r = 0; r <= p; ++r)
                for (int t = 0; t <= r; ++t) {
                    if (r == p && t > q) continue;
                    eri.set(p, q, r, t, m(p * n + q, r * n + t));
                }
    return eri;
}

double df_frobenius_error(const IntegralSet& s, const DoubleFactorization& d) {
    EriTensor recon = df_reconstruct(d);
    const int n = s.n_orb;
    double acc = 0.0;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int t = 0; t < n; ++t) {
                    double diff = s.eri(p, q, r, t) - recon(p, q, r, t);
                    acc += diff * diff;
                }
    return std::sqrt(acc);
}

double df_expectation(const DoubleFactorization& d, const CIVector& v) {
    if (!v.space) throw InvalidInput("df_expectation: vector has no determinant space");
    if (d.n_orb != v.space->n_orb())
        throw InvalidInput("df_expectation: orbital count mismatch");
    if (std::abs(v.amp.norm() - 1.0) > 1e-10)
        throw InvalidInput("df_expectation: state must be normalized");
    const DeterminantSpace& sp = *v.space;
    double e = d.e_core + v.amp.dot(apply_one_body(sp, d.one_body, v.amp));
    for (Eigen::Index t = 0; t < d.weights.size(); ++t)
        e += 0.5 * d.weights(t) * apply_one_body(sp, d.leaves[t], v.amp).squaredNorm();
    return e;
}

}  // namespace asq
