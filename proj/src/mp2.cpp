#include "asq/mp2.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "asq/errors.hpp"

namespace asq {

namespace {

struct CanonicalFrame {
    Eigen::VectorXd eps;
    std::vector<int> occ;
    std::vector<int> virt;
};

CanonicalFrame canonical_frame(const IntegralSet& s, const std::vector<int>& occupied,
                               double canon_tol) {
    std::set<int> occ_set(occupied.begin(), occupied.end());
    if (occ_set.size() != occupied.size())
        throw InvalidInput("mp2: occupied orbital listed twice");
    Eigen::MatrixXd f = closed_shell_fock(s, occupied);
    Eigen::MatrixXd off = f;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() > canon_tol)
        throw InvalidInput("mp2: orbitals are not canonical (Fock matrix not diagonal)");
    CanonicalFrame fr;
    fr.eps = f.diagonal();
    fr.occ.assign(occ_set.begin(), occ_set.end());
    for (int p = 0; p < s.n_orb; ++p)
        if (!occ_set.count(p)) fr.virt.push_back(p);
    return fr;
}

double denom_checked(const CanonicalFrame& fr, int i, int j, int a, int b) {
    double d = fr.eps(i) + fr.eps(j) - fr.eps(a) - fr.eps(b);
    if (std::abs(d) < 1e-10)
        throw InvalidInput("mp2: vanishing denominator (no occupied-virtual gap)");
    return d;
}

}  // namespace

double mp2_energy(const IntegralSet& s, const std::vector<int>& occupied, double canon_tol) {
    CanonicalFrame fr = canonical_frame(s, occupied, canon_tol);
    double e2 = 0.0;
    for (int i : fr.occ)
        for (int j : fr.occ)
            for (int a : fr.virt)
                for (int b : fr.virt) {
                    double iajb = s.eri(i, a, j, b);
                    double ibja = s.eri(i, b, j, a);
                    e2 += iajb * (2.0 * iajb - ibja) / denom_checked(fr, i, j, a, b);
                }
    return e2;
}

Eigen::MatrixXd mp2_virtual_density(const IntegralSet& s, const std::vector<int>& occupied,
                                    double canon_tol) {
    CanonicalFrame fr = canonical_frame(s, occupied, canon_tol);
    const int no = static_cast<int>(fr.occ.size());
    const int nv = static_cast<int>(fr.virt.size());

    // Amplitudes t[i][j](a,b), indexed by list positions.
    std::vector<Eigen::MatrixXd> t(static_cast<std::size_t>(no) * no);
    for (int i = 0; i < no; ++i)
        for (int j = 0; j < no; ++j) {
            Eigen::MatrixXd block(nv, nv);
            for (int a = 0; a < nv; ++a)
                for (int b = 0; b < nv; ++b)
                    block(a, b) = s.eri(fr.occ[i], fr.virt[a], fr.occ[j], fr.virt[b]) /
                                  denom_checked(fr, fr.occ[i], fr.occ[j], fr.virt[a],
                                                fr.virt[b]);
            t[static_cast<std::size_t>(i) * no + j] = block;
        }

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(nv, nv);
    for (int i = 0; i < no; ++i)
        for (int j = 0; j < no; ++j) {
            const Eigen::MatrixXd& tij = t[static_cast<std::size_t>(i) * no + j];
            // sum_c t^{ac} (4 t^{bc} - 2 t^{cb})
            d += tij * (4.0 * tij.transpose() - 2.0 * tij);
        }
    // Symmetric by construction up to round-off; tidy it for the eigensolver.
    d = 0.5 * (d + d.transpose()).eval();
    return d;
}

NaturalOrbitals natural_orbital_truncation(const Eigen::MatrixXd& density, double threshold,
                                           double psd_tol) {
    if (density.rows() != density.cols())
        throw InvalidInput("natural_orbital_truncation: density must be square");
    const int n = static_cast<int>(density.rows());
    NaturalOrbitals out;
    if (n == 0) {
        out.u.resize(0, 0);
        out.occupations.resize(0);
        return out;
    }
    if ((density - density.transpose()).cwiseAbs().maxCoeff() > psd_tol)
        throw InvalidInput("natural_orbital_truncation: density must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(density);
    if (es.info() != Eigen::Success)
        throw ConvergenceError("natural_orbital_truncation: eigensolver failed", 0.0, 0.0, 0);
    // Flip to descending occupation.
    Eigen::VectorXd occ(n);
    Eigen::MatrixXd u(n, n);
    for (int c = 0; c < n; ++c) {
        occ(c) = es.eigenvalues()(n - 1 - c);
        u.col(c) = es.eigenvectors().col(n - 1 - c);
    }
    if (occ(n - 1) < -psd_tol)
        throw InvalidInput("natural_orbital_truncation: density is not positive semidefinite");
    for (int c = 0; c < n; ++c) {
        int arg = 0;
        for (int r = 1; r < n; ++r)
            if (std::abs(u(r, c)) > std::abs(u(arg, c))) arg = r;
        if (u(arg, c) < 0.0) u.col(c) *= -1.0;
    }
    out.u = u;
    out.occupations = occ;
    out.n_retained = 0;
    for (int c = 0; c < n; ++c)
        if (occ(c) >= threshold) ++out.n_retained;
    return out;
}

ActiveSpace build_active_space(const IntegralSet& s, const std::vector<int>& occupied,
                               const std::vector<int>& occupied_select, double threshold) {
    if (threshold < 0.0) throw InvalidInput("build_active_space: threshold must be >= 0");
    std::set<int> occ_set(occupied.begin(), occupied.end());
    std::set<int> sel_set(occupied_select.begin(), occupied_select.end());
    if (sel_set.size() != occupied_select.size())
        throw InvalidInput("build_active_space: selected orbital listed twice");
    for (int i : occupied_select)
        if (!occ_set.count(i))
            throw InvalidInput("build_active_space: selected orbital is not occupied");

    ActiveSpace out;
    out.n_parent_orb = s.n_orb;
    out.n_parent_elec = s.n_elec;
    out.occupied_select.assign(sel_set.begin(), sel_set.end());
    for (int i : occ_set)
        if (!sel_set.count(i)) out.frozen.push_back(i);
    out.threshold = threshold;
    out.e_hf = closed_shell_energy(s, occupied);
    out.e_mp2_full = mp2_energy(s, occupied);

    // Fold the frozen shell; track where the kept orbitals land.
    IntegralSet folded = freeze_orbitals(s, out.frozen);
    std::vector<char> is_frozen(s.n_orb, 0);
    for (int i : out.frozen) is_frozen[i] = 1;
    std::vector<int> new_index(s.n_orb, -1);
    int pos = 0;
    for (int p = 0; p < s.n_orb; ++p)
        if (!is_frozen[p]) new_index[p] = pos++;
    std::vector<int> sel_new;
    for (int i : out.occupied_select) sel_new.push_back(new_index[i]);

    out.e_mp2_frozen = mp2_energy(folded, sel_new);

    // Virtual-virtual correlation density and its natural orbitals.
    Eigen::MatrixXd dvv = mp2_virtual_density(folded, sel_new);
    NaturalOrbitals nos = natural_orbital_truncation(dvv, threshold);
    out.no_occupations = nos.occupations;
    out.n_virtual_retained = nos.n_retained;

    std::set<int> sel_new_set(sel_new.begin(), sel_new.end());
    std::vector<int> virt_new;
    for (int p = 0; p < folded.n_orb; ++p)
        if (!sel_new_set.count(p)) virt_new.push_back(p);

    // Rotate the virtual block into the natural-orbital basis.
    Eigen::MatrixXd u = Eigen::MatrixXd::Identity(folded.n_orb, folded.n_orb);
    for (std::size_t a = 0; a < virt_new.size(); ++a)
        for (std::size_t b = 0; b < virt_new.size(); ++b)
            u(virt_new[a], virt_new[b]) = nos.u(static_cast<int>(a), static_cast<int>(b));
    IntegralSet rotated = rotate_integrals(folded, u);

    // Keep the selected occupied orbitals and the leading natural orbitals.
    std::vector<int> keep(sel_new);
    for (int c = 0; c < nos.n_retained; ++c) keep.push_back(virt_new[c]);
    IntegralSet truncated = restrict_to(rotated, keep);

    // Re-canonicalize within the occupied and virtual blocks.
    std::vector<int> occ_final(sel_new.size());
    for (std::size_t i = 0; i < sel_new.size(); ++i) occ_final[i] = static_cast<int>(i);
    std::vector<int> virt_final;
    for (int p = static_cast<int>(sel_new.size()); p < truncated.n_orb; ++p)
        virt_final.push_back(p);
    Recanonicalized rc = recanonicalize(truncated, occ_final, {occ_final, virt_final});
    out.integrals = rc.integrals;

    out.e_mp2_active =
        truncated.n_orb > static_cast<int>(occ_final.size()) && !occ_final.empty()
            ? mp2_energy(out.integrals, occ_final)
            : 0.0;
    return out;
}

}  // namespace asq
