#include "asq/qnp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "asq/errors.hpp"

namespace asq {

QnpFabric make_brick_fabric(int n_orb, int n_layers, SpinString ref_alpha,
                            SpinString ref_beta) {
    if (n_orb < 2) throw InvalidInput("brick fabric: need at least two orbitals");
    if (n_layers < 0) throw InvalidInput("brick fabric: negative layer count");
    SpinString mask = n_orb >= 64 ? ~SpinString{0} : (SpinString{1} << n_orb) - 1;
    if ((ref_alpha & ~mask) || (ref_beta & ~mask))
        throw InvalidInput("brick fabric: reference occupies orbitals outside the register");
    QnpFabric f;
    f.n_orb = n_orb;
    f.n_layers = n_layers;
    f.ref_alpha = ref_alpha;
    f.ref_beta = ref_beta;
    for (int layer = 0; layer < n_layers; ++layer) {
        for (int p = 0; p + 1 < n_orb; p += 2) f.gates.push_back({layer, p, p + 1});
        for (int p = 1; p + 1 < n_orb; p += 2) f.gates.push_back({layer, p, p + 1});
    }
    return f;
}

int block_count(const QnpFabric& f) {
    int n = 0;
    for (const QnpGate& g : f.gates)
        if (g.phi_enabled || g.theta_enabled) ++n;
    return n;
}

int gate_count(const QnpFabric& f) {
    int n = 0;
    for (const QnpGate& g : f.gates) n += (g.phi_enabled ? 1 : 0) + (g.theta_enabled ? 1 : 0);
    return n;
}

int parameter_count(const QnpFabric& f) { return gate_count(f); }

int cnot_estimate(const QnpFabric& f) {
    int n = 0;
    for (const QnpGate& g : f.gates) {
        if (g.phi_enabled) n += cnots_per_orbital_rotation;
        if (g.theta_enabled) n += cnots_per_pair_exchange;
    }
    return n;
}

Eigen::VectorXd get_parameters(const QnpFabric& f) {
    Eigen::VectorXd x(parameter_count(f));
    Eigen::Index i = 0;
    for (const QnpGate& g : f.gates) {
        if (g.phi_enabled) x(i++) = g.phi;
        if (g.theta_enabled) x(i++) = g.theta;
    }
    return x;
}

void set_parameters(QnpFabric& f, const Eigen::VectorXd& params) {
    if (params.size() != parameter_count(f))
        throw InvalidInput("set_parameters: expected " + std::to_string(parameter_count(f)) +
                           " angles, got " + std::to_string(params.size()));
    Eigen::Index i = 0;
    for (QnpGate& g : f.gates) {
        if (g.phi_enabled) g.phi = params(i++);
        if (g.theta_enabled) g.theta = params(i++);
    }
}

void randomize_parameters(QnpFabric& f, Rng& rng, double scale) {
    for (QnpGate& g : f.gates) {
        if (g.phi_enabled) g.phi = rng.uniform(-scale, scale);
        if (g.theta_enabled) g.theta = rng.uniform(-scale, scale);
    }
}

namespace {

void check_pair(const DeterminantSpace& space, int p, int q) {
    if (p < 0 || q < 0 || p >= space.n_orb() || q >= space.n_orb() || p == q)
        throw InvalidInput("gate: invalid orbital pair");
}

}  // namespace

void apply_orbital_rotation(const DeterminantSpace& space, int p, int q, double phi,
                            Eigen::VectorXd& v) {
    check_pair(space, p, q);
    if (p > q) std::swap(p, q);
    const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
    const SpinString bp = SpinString{1} << p, bq = SpinString{1} << q;
    const Eigen::Index nb = static_cast<Eigen::Index>(space.n_beta_strings());
    const Eigen::Index na = static_cast<Eigen::Index>(space.n_alpha_strings());

    // Alpha channel: rotate rows of the amplitude matrix.
    const auto& astr = space.alpha_strings();
    for (Eigen::Index ia = 0; ia < na; ++ia) {
        SpinString m = astr[ia];
        if (!(m & bp) || (m & bq)) continue;  // visit each pair once, from the p side
        Eigen::Index ja = static_cast<Eigen::Index>(space.alpha_rank((m ^ bp) | bq));
        double f = excitation_phase(m, p, q);
        for (Eigen::Index ib = 0; ib < nb; ++ib) {
            double a = v(ia * nb + ib), b = v(ja * nb + ib);
            v(ia * nb + ib) = c * a - f * s * b;
            v(ja * nb + ib) = f * s * a + c * b;
        }
    }
    // Beta channel: rotate columns.
    const auto& bstr = space.beta_strings();
    for (Eigen::Index ib = 0; ib < nb; ++ib) {
        SpinString m = bstr[ib];
        if (!(m & bp) || (m & bq)) continue;
        Eigen::Index jb = static_cast<Eigen::Index>(space.beta_rank((m ^ bp) | bq));
        double f = excitation_phase(m, p, q);
        for (Eigen::Index ia = 0; ia < na; ++ia) {
            double a = v(ia * nb + ib), b = v(ia * nb + jb);
            v(ia * nb + ib) = c * a - f * s * b;
            v(ia * nb + jb) = f * s * a + c * b;
        }
    }
}

void apply_orbital_rotation_generator(const DeterminantSpace& space, int p, int q,
                                      const Eigen::VectorXd& v, Eigen::VectorXd& w) {
    check_pair(space, p, q);
    if (p > q) std::swap(p, q);
    const SpinString bp = SpinString{1} << p, bq = SpinString{1} << q;
    const Eigen::Index nb = static_cast<Eigen::Index>(space.n_beta_strings());
    const Eigen::Index na = static_cast<Eigen::Index>(space.n_alpha_strings());
    w.setZero(v.size());

    const auto& astr = space.alpha_strings();
    for (Eigen::Index ia = 0; ia < na; ++ia) {
        SpinString m = astr[ia];
        if (!(m & bp) || (m & bq)) continue;
        Eigen::Index ja = static_cast<Eigen::Index>(space.alpha_rank((m ^ bp) | bq));
        double f = excitation_phase(m, p, q);
        for (Eigen::Index ib = 0; ib < nb; ++ib) {
            w(ia * nb + ib) += -f * v(ja * nb + ib);
            w(ja * nb + ib) += f * v(ia * nb + ib);
        }
    }
    const auto& bstr = space.beta_strings();
    for (Eigen::Index ib = 0; ib < nb; ++ib) {
        SpinString m = bstr[ib];
        if (!(m & bp) || (m & bq)) continue;
        Eigen::Index jb = static_cast<Eigen::Index>(space.beta_rank((m ^ bp) | bq));
        double f = excitation_phase(m, p, q);
        for (Eigen::Index ia = 0; ia < na; ++ia) {
            w(ia * nb + ib) += -f * v(ia * nb + jb);
            w(ia * nb + jb) += f * v(ia * nb + ib);
        }
    }
}

void apply_pair_exchange(const DeterminantSpace& space, int p, int q, double theta,
                         Eigen::VectorXd& v) {
    check_pair(space, p, q);
    if (p > q) std::swap(p, q);
    const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
    const SpinString bp = SpinString{1} << p, bq = SpinString{1} << q;
    const Eigen::Index nb = static_cast<Eigen::Index>(space.n_beta_strings());
    const Eigen::Index na = static_cast<Eigen::Index>(space.n_alpha_strings());

    const auto& astr = space.alpha_strings();
    const auto& bstr = space.beta_strings();
    for (Eigen::Index ia = 0; ia < na; ++ia) {
        SpinString ma = astr[ia];
        if (!(ma & bp) || (ma & bq)) continue;
        Eigen::Index ja = static_cast<Eigen::Index>(space.alpha_rank((ma ^ bp) | bq));
        int betw_a = count_between(ma, p, q);
        for (Eigen::Index ib = 0; ib < nb; ++ib) {
            SpinString mb = bstr[ib];
            if (!(mb & bp) || (mb & bq)) continue;
            Eigen::Index jb = static_cast<Eigen::Index>(space.beta_rank((mb ^ bp) | bq));
            double f = (betw_a + count_between(mb, p, q)) % 2 == 0 ? 1.0 : -1.0;
            double a = v(ia * nb + ib), b = v(ja * nb + jb);
            v(ia * nb + ib) = c * a - f * s * b;
            v(ja * nb + jb) = f * s * a + c * b;
        }
    }
}

void apply_pair_exchange_generator(const DeterminantSpace& space, int p, int q,
                                   const Eigen::VectorXd& v, Eigen::VectorXd& w) {
    check_pair(space, p, q);
    if (p > q) std::swap(p, q);
    const SpinString bp = SpinString{1} << p, bq = SpinString{1} << q;
    const Eigen::Index nb = static_cast<Eigen::Index>(space.n_beta_strings());
    const Eigen::Index na = static_cast<Eigen::Index>(space.n_alpha_strings());
    w.setZero(v.size());

    const auto& astr = space.alpha_strings();
    const auto& bstr = space.beta_strings();
    for (Eigen::Index ia = 0; ia < na; ++ia) {
        SpinString ma = astr[ia];
        if (!(ma & bp) || (ma & bq)) continue;
        Eigen::Index ja = static_cast<Eigen::Index>(space.alpha_rank((ma ^ bp) | bq));
        int betw_a = count_between(ma, p, q);
        for (Eigen::Index ib = 0; ib < nb; ++ib) {
            SpinString mb = bstr[ib];
            if (!(mb & bp) || (mb & bq)) continue;
            Eigen::Index jb = static_cast<Eigen::Index>(space.beta_rank((mb ^ bp) | bq));
            double f = (betw_a + count_between(mb, p, q)) % 2 == 0 ? 1.0 : -1.0;
            w(ia * nb + ib) += -f * v(ja * nb + jb);
            w(ja * nb + jb) += f * v(ia * nb + ib);
        }
    }
}

namespace {

// Apply one block (or its inverse) in place; disabled elementary gates are
// identities.
void apply_block(const DeterminantSpace& space, const QnpGate& g, Eigen::VectorXd& v,
                 bool inverse) {
    if (!inverse) {
        if (g.phi_enabled) apply_orbital_rotation(space, g.p, g.q, g.phi, v);
        if (g.theta_enabled) apply_pair_exchange(space, g.p, g.q, g.theta, v);
    } else {
        if (g.theta_enabled) apply_pair_exchange(space, g.p, g.q, -g.theta, v);
        if (g.phi_enabled) apply_orbital_rotation(space, g.p, g.q, -g.phi, v);
    }
}

std::shared_ptr<const DeterminantSpace> space_for(const QnpFabric& f) {
    return std::make_shared<DeterminantSpace>(f.n_orb, std::popcount(f.ref_alpha),
                                              std::popcount(f.ref_beta));
}

}  // namespace

CIVector prepare_state(const QnpFabric& f, std::shared_ptr<const DeterminantSpace> space) {
    if (space->n_orb() != f.n_orb || space->n_alpha() != std::popcount(f.ref_alpha) ||
        space->n_beta() != std::popcount(f.ref_beta))
        throw InvalidInput("prepare_state: space does not match the fabric's reference");
    CIVector v = CIVector::basis_state(std::move(space), f.ref_alpha, f.ref_beta);
    for (const QnpGate& g : f.gates) apply_block(*v.space, g, v.amp, false);
    return v;
}

CIVector prepare_state(const QnpFabric& f) { return prepare_state(f, space_for(f)); }

double fabric_energy(const QnpFabric& f, const DeterminantSpace& space, const HamApply& ham) {
    CIVector psi = prepare_state(f, std::make_shared<DeterminantSpace>(space));
    Eigen::VectorXd hpsi(psi.amp.size());
    ham(psi.amp, hpsi);
    return psi.amp.dot(hpsi);
}

double fabric_energy_gradient(const QnpFabric& f, const DeterminantSpace& space,
                              const HamApply& ham, Eigen::VectorXd& grad) {
    auto sp = std::make_shared<DeterminantSpace>(space);
    CIVector psi = prepare_state(f, sp);
    Eigen::VectorXd lambda(psi.amp.size());
    ham(psi.amp, lambda);  // lambda = H |psi>
    const double energy = psi.amp.dot(lambda);

    grad.resize(parameter_count(f));
    Eigen::Index gi = grad.size();
    Eigen::VectorXd phi = psi.amp;  // state after the k-th elementary gate
    Eigen::VectorXd gen(phi.size());

    // Reverse sweep: for U_k = exp(angle/2 K), dE/dangle = <lambda_k|K|phi_k>
    // (the 1/2 cancels against the two halves of <psi|H|d psi> + c.c.).
    for (auto it = f.gates.rbegin(); it != f.gates.rend(); ++it) {
        const QnpGate& g = *it;
        if (g.theta_enabled) {
            apply_pair_exchange_generator(*sp, g.p, g.q, phi, gen);
            grad(--gi) = lambda.dot(gen);
            apply_pair_exchange(*sp, g.p, g.q, -g.theta, phi);
            apply_pair_exchange(*sp, g.p, g.q, -g.theta, lambda);
        }
        if (g.phi_enabled) {
            apply_orbital_rotation_generator(*sp, g.p, g.q, phi, gen);
            grad(--gi) = lambda.dot(gen);
            apply_orbital_rotation(*sp, g.p, g.q, -g.phi, phi);
            apply_orbital_rotation(*sp, g.p, g.q, -g.phi, lambda);
        }
    }
    return energy;
}

VqeResult vqe_minimize(const QnpFabric& start, const HamApply& ham, const CgOptions& opts) {
    QnpFabric f = start;
    auto sp = space_for(f);
    Objective obj = [&f, &sp, &ham](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        set_parameters(f, x);
        if (grad == nullptr) return fabric_energy(f, *sp, ham);
        return fabric_energy_gradient(f, *sp, ham, *grad);
    };
    CgResult cg = cg_minimize(obj, get_parameters(f), opts);
    VqeResult r;
    set_parameters(f, cg.x);
    r.fabric = std::move(f);
    r.energy = cg.value;
    r.iterations = cg.iterations;
    r.evaluations = cg.evaluations;
    r.converged = cg.converged;
    r.trace = std::move(cg.trace);
    return r;
}

BasinHoppingResult basin_hopping(const QnpFabric& start, const HamApply& ham,
                                 const BasinHoppingOptions& opts) {
    QnpFabric f = start;
    auto sp = space_for(f);
    Objective obj = [&f, &sp, &ham](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        set_parameters(f, x);
        if (grad == nullptr) return fabric_energy(f, *sp, ham);
        return fabric_energy_gradient(f, *sp, ham, *grad);
    };
    BasinHopOptions bopts;
    bopts.n_hops = opts.n_hops;
    bopts.perturb_scale = opts.perturb_scale;
    bopts.temperature = opts.temperature;
    bopts.loose = opts.loose;
    bopts.tight = opts.tight;
    bopts.seed = opts.seed;
    BasinHopResult bh = basin_hop(obj, get_parameters(f), bopts);

    BasinHoppingResult r;
    set_parameters(f, bh.x);
    r.fabric = std::move(f);
    r.energy = bh.value;
    r.accepted = bh.accepted;
    r.evaluations = bh.evaluations;
    r.hop_energies = std::move(bh.hop_values);
    r.final_trace = std::move(bh.final_trace);
    return r;
}

PruneResult prune_gates(const QnpFabric& f, const HamApply& ham, const PruneOptions& opts) {
    PruneResult r;
    r.fabric = f;
    r.gates_before = gate_count(f);
    auto sp = space_for(f);

    // Phase 1: angles too small to matter.
    for (QnpGate& g : r.fabric.gates) {
        if (g.phi_enabled && std::abs(g.phi) < opts.eps_param) {
            g.phi_enabled = false;
            ++r.removed_small_angle;
        }
        if (g.theta_enabled && std::abs(g.theta) < opts.eps_param) {
            g.theta_enabled = false;
            ++r.removed_small_angle;
        }
    }
    double e_cur = fabric_energy(r.fabric, *sp, ham);

    // Phase 2: greedy low-impact removal, energy re-checked after each hit,
    // sweeping until stable.
    bool removed = true;
    while (removed) {
        removed = false;
        for (QnpGate& g : r.fabric.gates) {
            for (int which = 0; which < 2; ++which) {
                bool& flag = which == 0 ? g.phi_enabled : g.theta_enabled;
                if (!flag) continue;
                flag = false;
                double e_try = fabric_energy(r.fabric, *sp, ham);
                if (std::abs(e_try - e_cur) < opts.eps_energy) {
                    e_cur = e_try;
                    ++r.removed_low_impact;
                    removed = true;
                } else {
                    flag = true;
                }
            }
        }
    }
    r.energy = e_cur;
    r.gates_after = gate_count(r.fabric);
    return r;
}

nlohmann::json fabric_to_json(const QnpFabric& f) {
    nlohmann::json gates = nlohmann::json::array();
    for (const QnpGate& g : f.gates)
        gates.push_back({{"layer", g.layer},
                         {"pair", {g.p, g.q}},
                         {"phi", g.phi},
                         {"theta", g.theta},
                         {"enabled", g.phi_enabled || g.theta_enabled},
                         {"phi_enabled", g.phi_enabled},
                         {"theta_enabled", g.theta_enabled}});
    return nlohmann::json{{"n_orb", f.n_orb},
                          {"n_layers", f.n_layers},
                          {"reference",
                           {{"alpha", mask_to_string(f.ref_alpha, f.n_orb)},
                            {"beta", mask_to_string(f.ref_beta, f.n_orb)}}},
                          {"gates", gates}};
}

QnpFabric fabric_from_json(const nlohmann::json& j) {
    QnpFabric f;
    try {
        f.n_orb = j.at("n_orb").get<int>();
        f.n_layers = j.at("n_layers").get<int>();
        f.ref_alpha = mask_from_string(j.at("reference").at("alpha").get<std::string>());
        f.ref_beta = mask_from_string(j.at("reference").at("beta").get<std::string>());
        for (const auto& jg : j.at("gates")) {
            QnpGate g;
            g.layer = jg.at("layer").get<int>();
            g.p = jg.at("pair").at(0).get<int>();
            g.q = jg.at("pair").at(1).get<int>();
            g.phi = jg.at("phi").get<double>();
            g.theta = jg.at("theta").get<double>();
            bool enabled = jg.value("enabled", true);
            g.phi_enabled = jg.value("phi_enabled", enabled);
            g.theta_enabled = jg.value("theta_enabled", enabled);
            if (g.p >= g.q)
                throw InvalidInput("fabric: gate pair must be ordered p < q");
            if (g.q >= f.n_orb) throw InvalidInput("fabric: gate pair out of range");
            f.gates.push_back(g);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("fabric JSON: ") + e.what());
    }
    return f;
}

void save_fabric_file(const QnpFabric& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << fabric_to_json(f).dump(2) << '\n';
}

QnpFabric load_fabric_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open fabric file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("fabric JSON: ") + e.what());
    }
    return fabric_from_json(j);
}

}  // namespace asq
