#include "asq/eigensolver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "asq/errors.hpp"

namespace asq {

void fix_global_sign(Eigen::VectorXd& v) {
    if (v.size() == 0) return;
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    if (v(arg) < 0.0) v = -v;
}

namespace {

// Twice-iterated modified Gram-Schmidt of t against the columns of b.
// Returns false when t is (numerically) inside the span.
bool orthonormalize_against(const Eigen::MatrixXd& b, Eigen::Index m, Eigen::VectorXd& t) {
    for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index j = 0; j < m; ++j) t -= b.col(j).dot(t) * b.col(j);
    double nrm = t.norm();
    if (nrm < 1e-10) return false;
    t /= nrm;
    return true;
}

}  // namespace

EigenResult davidson_lowest(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& apply,
    Eigen::Index dim, const Eigen::VectorXd& diagonal, Eigen::VectorXd guess,
    const DavidsonOptions& opts) {
    if (dim < 1) throw InvalidInput("davidson: dimension must be >= 1");
    if (diagonal.size() != dim) throw InvalidInput("davidson: diagonal has wrong dimension");
    const Eigen::Index max_sub = std::min<Eigen::Index>(opts.max_subspace, dim);

    if (guess.size() == 0) {
        Eigen::Index arg = 0;
        for (Eigen::Index i = 1; i < dim; ++i)
            if (diagonal(i) < diagonal(arg)) arg = i;
        guess = Eigen::VectorXd::Zero(dim);
        guess(arg) = 1.0;
    } else if (guess.size() != dim) {
        throw InvalidInput("davidson: guess has wrong dimension");
    } else if (guess.norm() < 1e-12) {
        throw InvalidInput("davidson: guess has zero norm");
    }
    guess /= guess.norm();

    Eigen::MatrixXd b(dim, max_sub);   // orthonormal subspace
    Eigen::MatrixXd s(dim, max_sub);   // operator images of the columns
    Eigen::Index m = 0;
    b.col(m) = guess;
    Eigen::VectorXd tmp(dim);
    apply(b.col(m), tmp);
    s.col(m) = tmp;
    ++m;

    double best_energy = 0.0, best_residual = 0.0;
    for (int it = 1; it <= opts.max_iter; ++it) {
        Eigen::MatrixXd g = b.leftCols(m).transpose() * s.leftCols(m);
        g = 0.5 * (g + g.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
        double theta = es.eigenvalues()(0);
        Eigen::VectorXd y = es.eigenvectors().col(0);

        Eigen::VectorXd x = b.leftCols(m) * y;
        Eigen::VectorXd sx = s.leftCols(m) * y;
        Eigen::VectorXd r = sx - theta * x;
        double res = r.norm();
        best_energy = theta;
        best_residual = res;
        if (res <= opts.tol) {
            fix_global_sign(x);
            return {theta, std::move(x), res, it};
        }

        // Diagonal preconditioner with a clamped denominator.
        Eigen::VectorXd t(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            double den = diagonal(i) - theta;
            if (std::abs(den) < 1e-8) den = den < 0.0 ? -1e-8 : 1e-8;
            t(i) = r(i) / den;
        }

        if (m == max_sub) {
            // Collapse to the current Ritz vector, reusing its image.
            b.col(0) = x;
            s.col(0) = sx;
            m = 1;
        }
        if (!orthonormalize_against(b, m, t)) {
            // Preconditioned residual lies in the span; fall back to the raw
            // residual, then to the largest-residual axis vector.
            t = r;
            if (!orthonormalize_against(b, m, t)) {
                Eigen::Index arg = 0;
                for (Eigen::Index i = 1; i < dim; ++i)
                    if (std::abs(r(i)) > std::abs(r(arg))) arg = i;
                t = Eigen::VectorXd::Zero(dim);
                t(arg) = 1.0;
                if (!orthonormalize_against(b, m, t)) {
                    // Subspace cannot grow further: accept if reasonable.
                    if (res <= std::max(opts.tol, 1e-7)) {
                        fix_global_sign(x);
                        return {theta, std::move(x), res, it};
                    }
                    throw ConvergenceError("davidson: subspace exhausted before convergence",
                                           theta, res, it);
                }
            }
        }
        b.col(m) = t;
        apply(b.col(m), tmp);
        s.col(m) = tmp;
        ++m;
    }
    throw ConvergenceError("davidson: max iterations reached", best_energy, best_residual,
                           opts.max_iter);
}

Eigen::VectorXd broad_davidson_guess(const Eigen::VectorXd& diagonal) {
    const Eigen::Index dim = diagonal.size();
    if (dim < 1) throw InvalidInput("davidson guess: dimension must be >= 1");
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < dim; ++i)
        if (diagonal(i) < diagonal(arg)) arg = i;
    Eigen::VectorXd g =
        Eigen::VectorXd::Constant(dim, 1e-3 / std::sqrt(static_cast<double>(dim)));
    g(arg) += 1.0;
    return g / g.norm();
}

FciResult fci_ground_state(const IntegralSet& ints, int n_alpha, int n_beta,
                           const DavidsonOptions& opts) {
    auto space = std::make_shared<DeterminantSpace>(ints.n_orb, n_alpha, n_beta);
    DeterminantHamiltonian ham(space, ints);
    auto apply = [&ham](const Eigen::VectorXd& v, Eigen::VectorXd& out) { ham.apply(v, out); };
    EigenResult r = davidson_lowest(apply, static_cast<Eigen::Index>(space->dim()),
                                    ham.diagonal(), broad_davidson_guess(ham.diagonal()), opts);
    FciResult out;
    out.energy = r.energy;
    out.residual = r.residual;
    out.iterations = r.iterations;
    out.state = CIVector(space, std::move(r.vector));
    out.s_squared = s_squared(out.state);
    return out;
}

double s_squared(const std::vector<std::pair<SpinString, SpinString>>& dets,
                 const Eigen::VectorXd& coeffs, int n_orb) {
    if (static_cast<Eigen::Index>(dets.size()) != coeffs.size())
        throw InvalidInput("s_squared: determinant/coefficient count mismatch");
    if (dets.empty()) return 0.0;
    const int na = std::popcount(dets[0].first);
    const int nb = std::popcount(dets[0].second);
    for (const auto& [a, bm] : dets)
        if (std::popcount(a) != na || std::popcount(bm) != nb)
            throw InvalidInput("s_squared: determinants from mixed sectors");

    // || S+ psi ||^2 accumulated over raised determinants.
    std::map<std::pair<SpinString, SpinString>, double> raised;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        double c = coeffs(static_cast<Eigen::Index>(i));
        if (c == 0.0) continue;
        SpinString a = dets[i].first, bm = dets[i].second;
        for (int p = 0; p < n_orb; ++p) {
            SpinString bit = SpinString{1} << p;
            if (!(bm & bit) || (a & bit)) continue;
            // a^+_{p alpha} a_{p beta} in block order: the beta annihilation
            // crosses the whole alpha block, then its own lower bits.
            int sign = 1;
            if ((std::popcount(a) + std::popcount(bm & (bit - 1))) % 2 != 0) sign = -sign;
            if (std::popcount(a & (bit - 1)) % 2 != 0) sign = -sign;
            raised[{a | bit, bm & ~bit}] += sign * c;
        }
    }
    double raised_norm2 = 0.0;
    for (const auto& [det, c] : raised) raised_norm2 += c * c;
    double sz = 0.5 * (na - nb);
    return raised_norm2 + sz * (sz + 1.0);
}

double s_squared(const CIVector& v) {
    if (!v.space) throw InvalidInput("s_squared: vector has no determinant space");
    const DeterminantSpace& sp = *v.space;
    std::vector<std::pair<SpinString, SpinString>> dets;
    dets.reserve(sp.dim());
    for (std::size_t i = 0; i < sp.dim(); ++i) dets.push_back(sp.determinant(i));
    return s_squared(dets, v.amp, sp.n_orb());
}

}  // namespace asq
