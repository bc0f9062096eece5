#include "asq/integrals.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "asq/errors.hpp"

namespace asq {

void EriTensor::set(int p, int q, int r, int s, double value) {
    v_[idx(p, q, r, s)] = value;
    v_[idx(q, p, r, s)] = value;
    v_[idx(p, q, s, r)] = value;
    v_[idx(q, p, s, r)] = value;
    v_[idx(r, s, p, q)] = value;
    v_[idx(s, r, p, q)] = value;
    v_[idx(r, s, q, p)] = value;
    v_[idx(s, r, q, p)] = value;
}

double EriTensor::symmetry_defect() const {
    double worst = 0.0;
    for (int p = 0; p < n_; ++p)
        for (int q = 0; q <= p; ++q)
            for (int r = 0; r < n_; ++r)
                for (int s = 0; s <= r; ++s) {
                    const double v = v_[idx(p, q, r, s)];
                    worst = std::max(worst, std::abs(v - v_[idx(q, p, r, s)]));
                    worst = std::max(worst, std::abs(v - v_[idx(p, q, s, r)]));
                    worst = std::max(worst, std::abs(v - v_[idx(r, s, p, q)]));
                }
    return worst;
}

double IntegralSet::symmetry_defect() const {
    double worst = eri.symmetry_defect();
    if (h.rows() > 0) worst = std::max(worst, (h - h.transpose()).cwiseAbs().maxCoeff());
    return worst;
}

void IntegralSet::validate(double tol) const {
    if (n_orb < 1) throw InvalidInput("integral set: n_orb must be >= 1");
    if (n_elec < 0 || n_elec > 2 * n_orb)
        throw InvalidInput("integral set: n_elec out of range for " + std::to_string(n_orb) +
                           " orbitals");
    if (h.rows() != n_orb || h.cols() != n_orb)
        throw InvalidInput("integral set: one-electron matrix has wrong shape");
    if (eri.n() != n_orb) throw InvalidInput("integral set: ERI tensor has wrong dimension");
    if (std::abs(ms2) > n_elec || (ms2 + n_elec) % 2 != 0)
        throw InvalidInput("integral set: ms2 inconsistent with electron count");
    if (symmetry_defect() > tol)
        throw InvalidInput("integral set: permutational symmetry violated");
}

namespace {

// Canonical representative of the 8-fold orbit of (pq|rs): order within each
// pair, then order the pairs by their triangular index.
struct EriKey {
    long pq;
    long rs;
    bool operator<(const EriKey& o) const { return pq != o.pq ? pq < o.pq : rs < o.rs; }
};

EriKey eri_key(int p, int q, int r, int s) {
    if (p < q) std::swap(p, q);
    if (r < s) std::swap(r, s);
    long pq = static_cast<long>(p) * (p + 1) / 2 + q;
    long rs = static_cast<long>(r) * (r + 1) / 2 + s;
    if (pq < rs) std::swap(pq, rs);
    return {pq, rs};
}

std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

// Pull NORB/NELEC/MS2 out of the namelist text; unknown keys are ignored.
void parse_header(const std::string& header, int& norb, int& nelec, int& ms2,
                  bool& have_norb, bool& have_nelec) {
    std::string text = upper(header);
    for (char& c : text)
        if (c == ',' || c == '=') c = ' ';
    std::istringstream is(text);
    std::string tok;
    std::string pending;
    while (is >> tok) {
        if (tok == "NORB" || tok == "NELEC" || tok == "MS2") {
            pending = tok;
            continue;
        }
        if (pending.empty()) continue;
        try {
            int value = std::stoi(tok);
            if (pending == "NORB") {
                norb = value;
                have_norb = true;
            } else if (pending == "NELEC") {
                nelec = value;
                have_nelec = true;
            } else {
                ms2 = value;
            }
        } catch (const std::exception&) {
            throw ParseError("FCIDUMP header: non-integer value for " + pending);
        }
        pending.clear();
    }
}

}  // namespace

IntegralSet parse_fcidump(std::istream& in) {
    std::string line;
    int line_no = 0;

    // Header: everything up to and including the &END (or bare "/") marker.
    std::string header;
    bool header_done = false;
    bool header_started = false;
    while (!header_done && std::getline(in, line)) {
        ++line_no;
        if (!header_started) {
            if (is_blank(line)) continue;
            std::size_t first = line.find_first_not_of(" \t");
            if (line[first] != '&')
                throw ParseError("FCIDUMP line " + std::to_string(line_no) +
                                 ": expected namelist header starting with '&'");
            header_started = true;
        }
        std::string u = upper(line);
        std::size_t endpos = u.find("&END");
        if (endpos == std::string::npos) {
            std::size_t slash = line.find('/');
            if (slash != std::string::npos) endpos = slash;
        }
        if (endpos != std::string::npos) {
            header += ' ' + line.substr(0, endpos);
            header_done = true;
        } else {
            header += ' ' + line;
        }
    }
    if (!header_done) throw ParseError("FCIDUMP: unterminated namelist header");

    int norb = 0, nelec = 0, ms2 = 0;
    bool have_norb = false, have_nelec = false;
    parse_header(header, norb, nelec, ms2, have_norb, have_nelec);
    if (!have_norb || !have_nelec) throw ParseError("FCIDUMP header: NORB and NELEC required");
    if (norb < 1 || norb > 64)
        throw ParseError("FCIDUMP header: NORB out of supported range [1, 64]");
    if (nelec < 0 || nelec > 2 * norb)
        throw ParseError("FCIDUMP header: NELEC out of range for NORB");

    IntegralSet s(norb, nelec, ms2);

    // Duplicate bookkeeping: identical re-statements are tolerated,
    // contradictions are errors.
    std::map<EriKey, double> seen_eri;
    std::map<long, double> seen_h;
    bool seen_core = false;
    double core_value = 0.0;
    const double dup_tol = 1e-12;

    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        std::istringstream is(line);
        double value;
        long i, j, k, l;
        if (!(is >> value >> i >> j >> k >> l))
            throw ParseError("FCIDUMP line " + std::to_string(line_no) +
                             ": expected 'value i j k l'");
        std::string rest;
        if (is >> rest)
            throw ParseError("FCIDUMP line " + std::to_string(line_no) +
                             ": trailing content '" + rest + "'");
        auto in_range = [norb](long x) { return x >= 1 && x <= norb; };

        if (i == 0 && j == 0 && k == 0 && l == 0) {
            if (seen_core && std::abs(core_value - value) > dup_tol)
                throw ParseError("FCIDUMP line " + std::to_string(line_no) +
                                 ": conflicting core energy");
            core_value = value;
            seen_core = true;
        } else if (k == 0 && l == 0) {
            if (!in_range(i) || !in_range(j))
                throw ParseError("FCIDUMP line " + std::to_string(line_no) +
                                 ": orbital index out of range");
            int p = static_cast<int>(i) - 1, q = static_cast<int>(j) - 1;
            long key = static_cast<long>(std::max(p, q)) * norb + std::min(p, q);
            auto it = seen_h.find(key);
            if (it != seen_h.end() && std::abs(it->second - value) > dup_tol)
                throw ParseError("FCIDUMP line " + std::to_string(line_no) +
                                 ": conflicting one-electron element");
            seen_h[key] = value;
            s.h(p, q) = value;
            s.h(q, p) = value;
        } else if (in_range(i) && in_range(j) && in_range(k) && in_range(l)) {
            int p = static_cast<int>(i) - 1, q = static_cast<int>(j) - 1;
            int r = static_cast<int>(k) - 1, t = static_cast<int>(l) - 1;
            EriKey key = eri_key(p, q, r, t);
            auto it = seen_eri.find(key);
            if (it != seen_eri.end() && std::abs(it->second - value) > dup_tol)
                throw ParseError("FCIDUMP line " + std::to_string(line_no) +
                                 ": conflicting two-electron element");
            seen_eri[key] = value;
            s.eri.set(p, q, r, t, value);
        } else {
            throw ParseError("FCIDUMP line " + std::to_string(line_no) +
                             ": invalid index pattern");
        }
    }
    s.e_core = core_value;
    return s;
}

IntegralSet parse_fcidump_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open FCIDUMP file: " + path);
    return parse_fcidump(in);
}

namespace {

void write_record(std::ostream& out, double value, int i, int j, int k, int l) {
    char buf[96];
    // 17 significant digits: enough for an exact double round-trip.
    std::snprintf(buf, sizeof(buf), " %.16E %4d %4d %4d %4d\n", value, i, j, k, l);
    out << buf;
}

}  // namespace

void write_fcidump(const IntegralSet& s, std::ostream& out) {
    out << "&FCI NORB=" << s.n_orb << ",NELEC=" << s.n_elec << ",MS2=" << s.ms2 << ",\n";
    out << "  ORBSYM=";
    for (int p = 0; p < s.n_orb; ++p) out << "1,";
    out << "\n  ISYM=1,\n &END\n";

    // Unique two-electron elements: one canonical representative per orbit,
    // ascending in the (pq, rs) triangular indices.
    for (int p = 0; p < s.n_orb; ++p)
        for (int q = 0; q <= p; ++q)
            for (int r = 0; r <= p; ++r)
                for (int t = 0; t <= r; ++t) {
                    if (r == p && t > q) continue;
                    double v = s.eri(p, q, r, t);
                    if (v != 0.0) write_record(out, v, p + 1, q + 1, r + 1, t + 1);
                }
    for (int p = 0; p < s.n_orb; ++p)
        for (int q = 0; q <= p; ++q)
            if (s.h(p, q) != 0.0) write_record(out, s.h(p, q), p + 1, q + 1, 0, 0);
    write_record(out, s.e_core, 0, 0, 0, 0);
}

void write_fcidump_file(const IntegralSet& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    write_fcidump(s, out);
}

IntegralSet rotate_integrals(const IntegralSet& s, const Eigen::MatrixXd& u, double orth_tol) {
    const int n = s.n_orb;
    if (u.rows() != n || u.cols() != n)
        throw InvalidInput("rotate_integrals: rotation matrix has wrong shape");
    double defect = (u.transpose() * u - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (defect > orth_tol)
        throw InvalidInput("rotate_integrals: matrix is not orthogonal (defect " +
                           std::to_string(defect) + ")");

    IntegralSet out(n, s.n_elec, s.ms2);
    out.e_core = s.e_core;
    out.h = u.transpose() * s.h * u;

    // Four quarter transforms over the dense tensor.
    const std::size_t n4 = static_cast<std::size_t>(n) * n * n * n;
    std::vector<double> a(s.eri.raw());
    std::vector<double> b(n4, 0.0);
    auto at = [n](std::vector<double>& t, int p, int q, int r, int v) -> double& {
        return t[((static_cast<std::size_t>(p) * n + q) * n + r) * n + v];
    };
    // Index 1: g1[a,q,r,s] = sum_p u(p,a) g[p,q,r,s]
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int v = 0; v < n; ++v) {
                    double g = at(a, p, q, r, v);
                    if (g == 0.0) continue;
                    for (int x = 0; x < n; ++x) at(b, x, q, r, v) += u(p, x) * g;
                }
    std::fill(a.begin(), a.end(), 0.0);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int v = 0; v < n; ++v) {
                    double g = at(b, p, q, r, v);
                    if (g == 0.0) continue;
                    for (int x = 0; x < n; ++x) at(a, p, x, r, v) += u(q, x) * g;
                }
    std::fill(b.begin(), b.end(), 0.0);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int v = 0; v < n; ++v) {
                    double g = at(a, p, q, r, v);
                    if (g == 0.0) continue;
                    for (int x = 0; x < n; ++x) at(b, p, q, x, v) += u(r, x) * g;
                }
    std::fill(a.begin(), a.end(), 0.0);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int v = 0; v < n; ++v) {
                    double g = at(b, p, q, r, v);
                    if (g == 0.0) continue;
                    for (int x = 0; x < n; ++x) at(a, p, q, r, x) += u(v, x) * g;
                }

    // Re-symmetrize through set(): averages nothing, but guarantees the
    // storage invariant against round-off drift in the transform above.
    for (int p = 0; p < n; ++p)
        for (int q = 0; q <= p; ++q)
            for (int r = 0; r <= p; ++r)
                for (int t = 0; t <= r; ++t) {
                    if (r == p && t > q) continue;
                    out.eri.set(p, q, r, t, at(a, p, q, r, t));
                }
    return out;
}

Eigen::MatrixXd closed_shell_fock(const IntegralSet& s, const std::vector<int>& occupied) {
    const int n = s.n_orb;
    for (int i : occupied)
        if (i < 0 || i >= n) throw InvalidInput("closed_shell_fock: occupied index out of range");
    Eigen::MatrixXd f = s.h;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            double v = 0.0;
            for (int i : occupied) v += 2.0 * s.eri(p, q, i, i) - s.eri(p, i, i, q);
            f(p, q) += v;
        }
    return f;
}

double closed_shell_energy(const IntegralSet& s, const std::vector<int>& occupied) {
    double e = s.e_core;
    for (int i : occupied) e += 2.0 * s.h(i, i);
    for (int i : occupied)
        for (int j : occupied) e += 2.0 * s.eri(i, i, j, j) - s.eri(i, j, j, i);
    return e;
}

Recanonicalized recanonicalize(const IntegralSet& s, const std::vector<int>& occupied,
                               const std::vector<std::vector<int>>& groups) {
    const int n = s.n_orb;
    std::vector<char> hit(n, 0);
    for (const auto& g : groups)
        for (int p : g) {
            if (p < 0 || p >= n) throw InvalidInput("recanonicalize: orbital index out of range");
            if (hit[p]) throw InvalidInput("recanonicalize: orbital listed twice");
            hit[p] = 1;
        }
    if (!std::all_of(hit.begin(), hit.end(), [](char c) { return c == 1; }))
        throw InvalidInput("recanonicalize: groups must partition all orbitals");

    Eigen::MatrixXd f = closed_shell_fock(s, occupied);
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd eps = Eigen::VectorXd::Zero(n);
    for (const auto& g : groups) {
        const int m = static_cast<int>(g.size());
        if (m == 0) continue;
        Eigen::MatrixXd block(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) block(a, b) = f(g[a], g[b]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
        if (es.info() != Eigen::Success)
            throw ConvergenceError("recanonicalize: Fock block diagonalization failed", 0.0,
                                   0.0, 0);
        Eigen::MatrixXd vec = es.eigenvectors();  // ascending eigenvalues
        for (int c = 0; c < m; ++c) {
            // Deterministic sign: largest-magnitude entry positive, first wins.
            int arg = 0;
            for (int rix = 1; rix < m; ++rix)
                if (std::abs(vec(rix, c)) > std::abs(vec(arg, c))) arg = rix;
            if (vec(arg, c) < 0.0) vec.col(c) *= -1.0;
        }
        for (int a = 0; a < m; ++a)
            for (int c = 0; c < m; ++c) u(g[a], g[c]) = vec(a, c);
        for (int c = 0; c < m; ++c) eps(g[c]) = es.eigenvalues()(c);
    }
    Recanonicalized out{rotate_integrals(s, u), u, eps};
    return out;
}

IntegralSet restrict_to(const IntegralSet& s, const std::vector<int>& keep) {
    const int m = static_cast<int>(keep.size());
    for (int p : keep)
        if (p < 0 || p >= s.n_orb) throw InvalidInput("restrict_to: orbital index out of range");
    IntegralSet out(m, s.n_elec, s.ms2);
    out.e_core = s.e_core;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) out.h(a, b) = s.h(keep[a], keep[b]);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b <= a; ++b)
            for (int c = 0; c <= a; ++c)
                for (int d = 0; d <= c; ++d) {
                    if (c == a && d > b) continue;
                    out.eri.set(a, b, c, d, s.eri(keep[a], keep[b], keep[c], keep[d]));
                }
    return out;
}

IntegralSet freeze_orbitals(const IntegralSet& s, const std::vector<int>& frozen) {
    std::vector<char> is_frozen(s.n_orb, 0);
    for (int i : frozen) {
        if (i < 0 || i >= s.n_orb)
            throw InvalidInput("freeze_orbitals: orbital index out of range");
        if (is_frozen[i]) throw InvalidInput("freeze_orbitals: orbital listed twice");
        is_frozen[i] = 1;
    }
    if (2 * static_cast<int>(frozen.size()) > s.n_elec)
        throw InvalidInput("freeze_orbitals: more frozen pairs than electrons");

    // Scalar part: energy of the frozen closed shell.
    double core = s.e_core;
    for (int i : frozen) core += 2.0 * s.h(i, i);
    for (int i : frozen)
        for (int j : frozen) core += 2.0 * s.eri(i, i, j, j) - s.eri(i, j, j, i);

    // Mean field of the frozen shell acting on the kept orbitals.
    std::vector<int> keep;
    for (int p = 0; p < s.n_orb; ++p)
        if (!is_frozen[p]) keep.push_back(p);

    IntegralSet folded = s;
    folded.e_core = core;
    for (int p : keep)
        for (int q : keep) {
            double v = 0.0;
            for (int i : frozen) v += 2.0 * s.eri(p, q, i, i) - s.eri(p, i, i, q);
            folded.h(p, q) += v;
        }
    IntegralSet out = restrict_to(folded, keep);
    out.n_elec = s.n_elec - 2 * static_cast<int>(frozen.size());
    out.ms2 = s.ms2;
    return out;
}

}  // namespace asq
