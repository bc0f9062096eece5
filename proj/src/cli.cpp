#include "asq/cli.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "asq/detspace.hpp"
#include "asq/eigensolver.hpp"
#include "asq/embedding.hpp"
#include "asq/errors.hpp"
#include "asq/integrals.hpp"
#include "asq/mp2.hpp"
#include "asq/qnp.hpp"
#include "asq/sqd.hpp"

namespace asq {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string iso_timestamp() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("config file must contain a JSON object");
    return j;
}

// Per-command option resolution: command-line flags override config-file
// keys, which override built-in defaults.  Records the resolved values for
// the report and rejects unknown config keys.
class Ctx {
public:
    Ctx(CLI::App* cmd, const std::string& config_path)
        : cmd_(cmd), cfg_(load_config_file(config_path)) {
        if (!config_path.empty()) resolved_["config"] = config_path;
    }

    template <typename T>
    T get(const std::string& key, const T& cli_value) {
        known_.insert(key);
        const CLI::Option* opt = cmd_->get_option("--" + key);
        T value = cli_value;
        if (opt->count() == 0 && cfg_.contains(key)) {
            try {
                value = cfg_.at(key).get<T>();
            } catch (const json::exception& e) {
                throw ParseError("config key '" + key + "': " + e.what());
            }
        }
        resolved_[key] = value;
        return value;
    }

    void finish() const {
        for (const auto& [key, v] : cfg_.items())
            if (!known_.count(key))
                throw ParseError("config: unknown key '" + key + "' for command '" +
                                 cmd_->get_name() + "'");
    }

    const json& resolved() const { return resolved_; }

private:
    CLI::App* cmd_;
    json cfg_;
    json resolved_ = json::object();
    std::set<std::string> known_;
};

struct CommonOpts {
    std::string config_path;
    std::string output_dir = ".";
    std::uint64_t seed = 1;
    int threads = 1;
    bool no_timestamp = false;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--config", c.config_path,
                    "JSON config file; command-line flags override its keys");
    cmd->add_option("--output", c.output_dir, "Directory for report files");
    cmd->add_option("--seed", c.seed, "Seed for all random streams of the run");
    cmd->add_option("--threads", c.threads, "Worker threads (sampling)");
    cmd->add_flag("--no-timestamp", c.no_timestamp,
                  "Omit timestamps so repeated runs are byte-identical");
}

struct Resolved {
    std::string output_dir;
    std::uint64_t seed;
    int threads;
    bool no_timestamp;
};

Resolved resolve_common(Ctx& ctx, const CommonOpts& c) {
    Resolved r;
    r.output_dir = ctx.get<std::string>("output", c.output_dir);
    r.seed = ctx.get<std::uint64_t>("seed", c.seed);
    r.threads = ctx.get<int>("threads", c.threads);
    r.no_timestamp = ctx.get<bool>("no-timestamp", c.no_timestamp);
    return r;
}

json base_report(const char* command, const Ctx& ctx, bool no_timestamp) {
    json r;
    r["command"] = command;
    r["config"] = ctx.resolved();
    if (!no_timestamp) r["timestamp"] = iso_timestamp();
    return r;
}

void write_json_file(const json& j, const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw ParseError("cannot write report file: " + name);
    out << j.dump(2) << '\n';
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw ParseError("cannot write output file: " + name);
    return out;
}

// Spin sector from the electron count and 2*Sz, with optional overrides.
std::pair<int, int> sector_of(const IntegralSet& ints, int n_alpha_flag, int n_beta_flag) {
    if ((n_alpha_flag >= 0) != (n_beta_flag >= 0))
        throw InvalidInput("give both --n-alpha and --n-beta or neither");
    if (n_alpha_flag >= 0) return {n_alpha_flag, n_beta_flag};
    if ((ints.n_elec + ints.ms2) % 2 != 0)
        throw InvalidInput("electron count and MS2 have inconsistent parity");
    int na = (ints.n_elec + ints.ms2) / 2;
    int nb = ints.n_elec - na;
    if (na < 0 || nb < 0 || na > ints.n_orb || nb > ints.n_orb)
        throw InvalidInput("derived spin sector is out of range");
    return {na, nb};
}

std::vector<int> aufbau_occupied(const IntegralSet& ints) {
    if (ints.n_elec % 2 != 0)
        throw InvalidInput("closed-shell occupation requires an even electron count");
    std::vector<int> occ(ints.n_elec / 2);
    for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = static_cast<int>(i);
    return occ;
}

std::string require_path(const std::string& value, const char* what) {
    if (value.empty()) throw ParseError(std::string(what) + " is required");
    return value;
}

// ---------------------------------------------------------------- fci ----

void cmd_fci(CLI::App* cmd, const CommonOpts& common, const std::string& fcidump,
             int n_alpha, int n_beta, double tol, bool save_vector) {
    Ctx ctx(cmd, common.config_path);
    Resolved rc = resolve_common(ctx, common);
    std::string dump = ctx.get<std::string>("fcidump", fcidump);
    int na_flag = ctx.get<int>("n-alpha", n_alpha);
    int nb_flag = ctx.get<int>("n-beta", n_beta);
    double rtol = ctx.get<double>("tol", tol);
    bool savev = ctx.get<bool>("save-vector", save_vector);
    ctx.finish();

    IntegralSet ints = parse_fcidump_file(require_path(dump, "--fcidump"));
    auto [na, nb] = sector_of(ints, na_flag, nb_flag);
    DavidsonOptions opts;
    opts.tol = rtol;
    FciResult res = fci_ground_state(ints, na, nb, opts);

    json report = base_report("fci", ctx, rc.no_timestamp);
    report["n_orb"] = ints.n_orb;
    report["n_elec"] = ints.n_elec;
    report["n_alpha"] = na;
    report["n_beta"] = nb;
    report["dim"] = res.state.space->dim();
    report["e_fci"] = res.energy;
    report["s_squared"] = res.s_squared;
    report["iterations"] = res.iterations;
    report["residual"] = res.residual;
    write_json_file(report, rc.output_dir, "fci.json");
    if (savev)
        save_civector_file(res.state,
                           (fs::path(rc.output_dir) / "state_vector.txt").string());
    std::printf("e_fci = %.12f  (dim %zu, %d iterations)\n", res.energy,
                res.state.space->dim(), res.iterations);
}

// ------------------------------------------------------- active-space ----

void cmd_active_space(CLI::App* cmd, const CommonOpts& common, const std::string& fcidump,
                      const std::vector<int>& select, double threshold,
                      const std::vector<double>& sweep, bool fci_check) {
    Ctx ctx(cmd, common.config_path);
    Resolved rc = resolve_common(ctx, common);
    std::string dump = ctx.get<std::string>("fcidump", fcidump);
    std::vector<int> sel = ctx.get<std::vector<int>>("select", select);
    double thr = ctx.get<double>("threshold", threshold);
    std::vector<double> thresholds = ctx.get<std::vector<double>>("sweep", sweep);
    bool check = ctx.get<bool>("fci-check", fci_check);
    ctx.finish();

    IntegralSet ints = parse_fcidump_file(require_path(dump, "--fcidump"));
    std::vector<int> occupied = aufbau_occupied(ints);
    if (sel.empty()) sel = occupied;
    if (thresholds.empty()) thresholds = {thr};

    json report = base_report("active-space", ctx, rc.no_timestamp);
    report["parent"] = {{"n_orb", ints.n_orb}, {"n_elec", ints.n_elec}};

    double e_fci_parent = 0.0;
    if (check) {
        auto [na, nb] = sector_of(ints, -1, -1);
        e_fci_parent = fci_ground_state(ints, na, nb).energy;
        report["e_fci_parent"] = e_fci_parent;
    }

    auto csv = open_output(rc.output_dir, "active_space_sweep.csv");
    csv << "threshold,n_orb_active,n_elec_active,n_virtual_retained,e_hf,"
           "e_mp2_full,e_mp2_frozen,e_mp2_active"
        << (check ? ",e_fci_active,e_fci_parent" : "") << "\n";

    json runs = json::array();
    for (double t : thresholds) {
        ActiveSpace as = build_active_space(ints, occupied, sel, t);
        char fname[64];
        std::snprintf(fname, sizeof(fname), "active_%.0e.fcidump", t);
        write_fcidump_file(as.integrals, (fs::path(rc.output_dir) / fname).string());

        json run{{"threshold", t},
                 {"n_orb_active", as.integrals.n_orb},
                 {"n_elec_active", as.integrals.n_elec},
                 {"n_virtual_retained", as.n_virtual_retained},
                 {"frozen", as.frozen},
                 {"selected", as.occupied_select},
                 {"e_hf", as.e_hf},
                 {"e_mp2_full", as.e_mp2_full},
                 {"e_mp2_frozen", as.e_mp2_frozen},
                 {"e_mp2_active", as.e_mp2_active},
                 {"fcidump", fname}};
        json occs = json::array();
        for (Eigen::Index i = 0; i < as.no_occupations.size(); ++i)
            occs.push_back(as.no_occupations(i));
        run["no_occupations"] = occs;

        char line[384];
        std::snprintf(line, sizeof(line), "%.3e,%d,%d,%d,%.12e,%.12e,%.12e,%.12e", t,
                      as.integrals.n_orb, as.integrals.n_elec, as.n_virtual_retained, as.e_hf,
                      as.e_mp2_full, as.e_mp2_frozen, as.e_mp2_active);
        csv << line;
        if (check) {
            auto [na, nb] = sector_of(as.integrals, -1, -1);
            double e_fci_active = fci_ground_state(as.integrals, na, nb).energy;
            run["e_fci_active"] = e_fci_active;
            std::snprintf(line, sizeof(line), ",%.12e,%.12e", e_fci_active, e_fci_parent);
            csv << line;
        }
        csv << "\n";
        runs.push_back(run);
        std::printf("threshold %.3e -> (%de, %do), e_corr(mp2) = %.9f\n", t,
                    as.integrals.n_elec, as.integrals.n_orb, as.e_mp2_active);
    }
    report["runs"] = runs;
    write_json_file(report, rc.output_dir, "active_space.json");
}

// ----------------------------------------------------------------- vqe ----

void cmd_vqe(CLI::App* cmd, const CommonOpts& common, const std::string& fcidump, int layers,
             int hops, double perturb, double temperature, bool fci_reference,
             const std::string& fabric_in, bool prune, double prune_eps_param,
             double prune_eps_energy, int n_alpha, int n_beta) {
    Ctx ctx(cmd, common.config_path);
    Resolved rc = resolve_common(ctx, common);
    std::string dump = ctx.get<std::string>("fcidump", fcidump);
    int nl = ctx.get<int>("layers", layers);
    int nh = ctx.get<int>("hops", hops);
    double pert = ctx.get<double>("perturb", perturb);
    double temp = ctx.get<double>("temperature", temperature);
    bool want_fci = ctx.get<bool>("fci-reference", fci_reference);
    std::string fin = ctx.get<std::string>("fabric", fabric_in);
    bool do_prune = ctx.get<bool>("prune", prune);
    double epsp = ctx.get<double>("prune-eps-param", prune_eps_param);
    double epse = ctx.get<double>("prune-eps-energy", prune_eps_energy);
    int na_flag = ctx.get<int>("n-alpha", n_alpha);
    int nb_flag = ctx.get<int>("n-beta", n_beta);
    ctx.finish();

    IntegralSet ints = parse_fcidump_file(require_path(dump, "--fcidump"));
    auto [na, nb] = sector_of(ints, na_flag, nb_flag);

    QnpFabric fabric;
    if (!fin.empty()) {
        fabric = load_fabric_file(fin);
        if (fabric.n_orb != ints.n_orb)
            throw InvalidInput("fabric register does not match the integrals");
    } else {
        SpinString ra = na == 0 ? 0 : (SpinString{1} << na) - 1;
        SpinString rb = nb == 0 ? 0 : (SpinString{1} << nb) - 1;
        fabric = make_brick_fabric(ints.n_orb, nl, ra, rb);
    }

    auto space = std::make_shared<DeterminantSpace>(ints.n_orb, na, nb);
    DeterminantHamiltonian ham(space, ints);
    HamApply apply = [&ham](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
        ham.apply(v, out);
    };

    json report = base_report("vqe", ctx, rc.no_timestamp);
    report["n_orb"] = ints.n_orb;
    report["n_alpha"] = na;
    report["n_beta"] = nb;
    report["parameter_count"] = parameter_count(fabric);
    report["gate_count"] = gate_count(fabric);

    double energy = 0.0;
    std::vector<double> hop_energies, final_trace;
    if (nh > 0) {
        BasinHoppingOptions opts;
        opts.n_hops = nh;
        opts.perturb_scale = pert;
        opts.temperature = temp;
        opts.seed = rc.seed;
        BasinHoppingResult res = basin_hopping(fabric, apply, opts);
        fabric = res.fabric;
        energy = res.energy;
        hop_energies = res.hop_energies;
        final_trace = res.final_trace;
        report["hops"] = nh;
        report["hops_accepted"] = res.accepted;
        report["evaluations"] = res.evaluations;
    } else {
        CgOptions opts{1e-8, 0.0, 1000};
        VqeResult res = vqe_minimize(fabric, apply, opts);
        fabric = res.fabric;
        energy = res.energy;
        final_trace = res.trace;
        report["evaluations"] = res.evaluations;
        report["converged"] = res.converged;
    }
    report["e_vqe"] = energy;

    if (na == nb) {
        std::vector<int> occ(static_cast<std::size_t>(na));
        for (int i = 0; i < na; ++i) occ[static_cast<std::size_t>(i)] = i;
        report["e_ref_determinant"] = closed_shell_energy(ints, occ);
    }
    if (want_fci) {
        FciResult fci = fci_ground_state(ints, na, nb);
        report["e_fci"] = fci.energy;
        report["delta_to_fci_kj"] = (energy - fci.energy) * kj_per_mol_per_hartree;
    }
    {
        CIVector state = prepare_state(fabric);
        report["s_squared"] = s_squared(state);
    }

    if (do_prune) {
        PruneOptions popts{epsp, epse};
        PruneResult pr = prune_gates(fabric, apply, popts);
        fabric = pr.fabric;
        report["prune"] = {{"gates_before", pr.gates_before},
                           {"gates_after", pr.gates_after},
                           {"removed_small_angle", pr.removed_small_angle},
                           {"removed_low_impact", pr.removed_low_impact},
                           {"e_pruned", pr.energy}};
        energy = pr.energy;
    }
    report["cnot_estimate"] = cnot_estimate(fabric);

    fs::create_directories(rc.output_dir);
    save_fabric_file(fabric, (fs::path(rc.output_dir) / "fabric.json").string());
    auto csv = open_output(rc.output_dir, "vqe_trace.csv");
    csv << "stage,index,energy\n";
    char line[96];
    for (std::size_t i = 0; i < hop_energies.size(); ++i) {
        std::snprintf(line, sizeof(line), "hop,%zu,%.12e\n", i, hop_energies[i]);
        csv << line;
    }
    for (std::size_t i = 0; i < final_trace.size(); ++i) {
        std::snprintf(line, sizeof(line), "final,%zu,%.12e\n", i, final_trace[i]);
        csv << line;
    }
    write_json_file(report, rc.output_dir, "vqe.json");
    std::printf("e_vqe = %.12f  (%d parameters)\n", energy, parameter_count(fabric));
}

// ------------------------------------------------------ sample / sqd ----

CIVector prepared_state(const IntegralSet& ints, int na, int nb, const std::string& fabric_path,
                        bool from_fci) {
    if (fabric_path.empty() == !from_fci)
        throw InvalidInput("choose exactly one state source: --fabric or --from-fci");
    if (from_fci) return fci_ground_state(ints, na, nb).state;
    QnpFabric f = load_fabric_file(fabric_path);
    if (f.n_orb != ints.n_orb)
        throw InvalidInput("fabric register does not match the integrals");
    if (std::popcount(f.ref_alpha) != na || std::popcount(f.ref_beta) != nb)
        throw InvalidInput("fabric reference does not match the requested sector");
    return prepare_state(f);
}

void cmd_sample(CLI::App* cmd, const CommonOpts& common, const std::string& fcidump,
                std::uint64_t shots, const std::string& fabric_path, bool from_fci,
                double readout_flip, double amplitude_noise, int n_alpha, int n_beta) {
    Ctx ctx(cmd, common.config_path);
    Resolved rc = resolve_common(ctx, common);
    std::string dump = ctx.get<std::string>("fcidump", fcidump);
    std::uint64_t ns = ctx.get<std::uint64_t>("shots", shots);
    std::string fpath = ctx.get<std::string>("fabric", fabric_path);
    bool use_fci = ctx.get<bool>("from-fci", from_fci);
    SamplingNoise noise;
    noise.readout_flip = ctx.get<double>("readout-flip", readout_flip);
    noise.amplitude_noise = ctx.get<double>("amplitude-noise", amplitude_noise);
    int na_flag = ctx.get<int>("n-alpha", n_alpha);
    int nb_flag = ctx.get<int>("n-beta", n_beta);
    ctx.finish();

    IntegralSet ints = parse_fcidump_file(require_path(dump, "--fcidump"));
    auto [na, nb] = sector_of(ints, na_flag, nb_flag);
    CIVector state = prepared_state(ints, na, nb, fpath, use_fci);
    SampleSet samples = sample_bitstrings(state, ns, rc.seed, noise, rc.threads);
    fs::create_directories(rc.output_dir);
    save_sample_set_file(samples, (fs::path(rc.output_dir) / "samples.json").string());
    std::printf("sampled %llu shots, %zu distinct strings\n",
                static_cast<unsigned long long>(samples.total_shots), samples.counts.size());
}

void cmd_sqd(CLI::App* cmd, const CommonOpts& common, const std::string& fcidump,
             const std::string& samples_path, std::uint64_t shots,
             const std::string& fabric_path, bool from_fci, double readout_flip,
             double amplitude_noise, int rounds, double energy_tol, bool fci_reference,
             int n_alpha, int n_beta) {
    Ctx ctx(cmd, common.config_path);
    Resolved rc = resolve_common(ctx, common);
    std::string dump = ctx.get<std::string>("fcidump", fcidump);
    std::string spath = ctx.get<std::string>("samples", samples_path);
    std::uint64_t ns = ctx.get<std::uint64_t>("shots", shots);
    std::string fpath = ctx.get<std::string>("fabric", fabric_path);
    bool use_fci = ctx.get<bool>("from-fci", from_fci);
    SamplingNoise noise;
    noise.readout_flip = ctx.get<double>("readout-flip", readout_flip);
    noise.amplitude_noise = ctx.get<double>("amplitude-noise", amplitude_noise);
    int nr = ctx.get<int>("rounds", rounds);
    double etol = ctx.get<double>("energy-tol", energy_tol);
    bool want_fci = ctx.get<bool>("fci-reference", fci_reference);
    int na_flag = ctx.get<int>("n-alpha", n_alpha);
    int nb_flag = ctx.get<int>("n-beta", n_beta);
    ctx.finish();

    IntegralSet ints = parse_fcidump_file(require_path(dump, "--fcidump"));
    auto [na, nb] = sector_of(ints, na_flag, nb_flag);
    SampleSet samples;
    if (!spath.empty()) {
        samples = sample_set_from_file(spath);
        if (samples.n_orb != ints.n_orb)
            throw InvalidInput("sample register does not match the integrals");
    } else {
        CIVector state = prepared_state(ints, na, nb, fpath, use_fci);
        samples = sample_bitstrings(state, ns, rc.seed, noise, rc.threads);
    }

    SqdOptions opts;
    opts.n_alpha = na;
    opts.n_beta = nb;
    opts.max_rounds = nr;
    opts.energy_tol = etol;
    opts.seed = rc.seed;
    SqdResult res = sqd_run(samples, ints, opts);
    HammingHistogram hist = hamming_histogram(samples);

    json report = base_report("sqd", ctx, rc.no_timestamp);
    report["n_orb"] = ints.n_orb;
    report["n_alpha"] = na;
    report["n_beta"] = nb;
    report["total_shots"] = samples.total_shots;
    report["distinct_strings"] = samples.counts.size();
    report["postselected_shots"] = res.postselected.total_shots;
    report["postselect_empty"] = res.postselect_empty;
    report["recovery_rounds"] = res.recovery_rounds;
    report["converged"] = res.converged;
    report["final_energy"] = res.final_energy;
    report["final_dim"] = res.final_state.configs.size();
    report["final_s_squared"] = res.final_state.s_squared;
    json jr = json::array();
    for (std::size_t i = 0; i < res.rounds.size(); ++i)
        jr.push_back({{"round", i},
                      {"energy", res.rounds[i].energy},
                      {"dim", res.rounds[i].dim},
                      {"s_squared", res.rounds[i].s_squared}});
    report["rounds"] = jr;
    if (want_fci) {
        FciResult fci = fci_ground_state(ints, na, nb);
        report["e_fci"] = fci.energy;
        report["delta_to_fci_kj"] = (res.final_energy - fci.energy) * kj_per_mol_per_hartree;
        if (!res.rounds.empty())
            report["delta_postselect_kj"] =
                (res.rounds.front().energy - fci.energy) * kj_per_mol_per_hartree;
    }
    write_json_file(report, rc.output_dir, "sqd.json");

    auto csv = open_output(rc.output_dir, "sqd_histogram.csv");
    csv << "electrons,unique_strings,shots\n";
    for (const auto& [k, bin] : hist.total) {
        char line[96];
        std::snprintf(line, sizeof(line), "%d,%llu,%llu\n", k,
                      static_cast<unsigned long long>(bin.unique_strings),
                      static_cast<unsigned long long>(bin.shots));
        csv << line;
    }
    std::printf("sqd final energy = %.12f after %d recovery rounds (dim %zu)\n",
                res.final_energy, res.recovery_rounds, res.final_state.configs.size());
}

// ---------------------------------------------------------- adsorption ----

SystemEnergies system_from_fcidump(const std::string& path, const std::string& method) {
    IntegralSet ints = parse_fcidump_file(path);
    SystemEnergies s;
    s.e_hf = closed_shell_energy(ints, aufbau_occupied(ints));
    if (method == "fci") {
        auto [na, nb] = sector_of(ints, -1, -1);
        s.e_m1_as = fci_ground_state(ints, na, nb).energy - s.e_hf;
    } else if (method != "hf") {
        throw InvalidInput("unknown method '" + method + "' (expected hf or fci)");
    }
    return s;
}

void cmd_adsorption(CLI::App* cmd, const CommonOpts& common, const std::string& ledger_path,
                    const std::string& host, const std::string& molecule,
                    const std::string& complex_path, const std::string& method) {
    Ctx ctx(cmd, common.config_path);
    Resolved rc = resolve_common(ctx, common);
    std::string lpath = ctx.get<std::string>("ledger", ledger_path);
    std::string hpath = ctx.get<std::string>("host", host);
    std::string mpath = ctx.get<std::string>("molecule", molecule);
    std::string cpath = ctx.get<std::string>("complex", complex_path);
    std::string meth = ctx.get<std::string>("method", method);
    ctx.finish();
    if (meth != "hf" && meth != "fci")
        throw InvalidInput("unknown method '" + meth + "' (expected hf or fci)");

    AdsorptionLedger ledger;
    if (!lpath.empty()) {
        ledger = ledger_from_file(lpath);
    } else {
        if (hpath.empty() || mpath.empty() || cpath.empty())
            throw ParseError("need --ledger or all of --host/--molecule/--complex");
        ledger.host = system_from_fcidump(hpath, meth);
        ledger.molecule = system_from_fcidump(mpath, meth);
        ledger.complex_ = system_from_fcidump(cpath, meth);
    }
    AdsorptionResult result = adsorption_energy(ledger);

    json report = base_report("adsorption", ctx, rc.no_timestamp);
    report["ledger"] = to_json(ledger);
    report["result"] = to_json(result);
    write_json_file(report, rc.output_dir, "adsorption.json");
    auto csv = open_output(rc.output_dir, "adsorption.csv");
    write_adsorption_csv(ledger, result, csv);
    std::printf("adsorption energy = %.6f kJ/mol (mean-field %.6f, correlation %.6f)\n",
                result.de_total_kj, result.de_hf_kj, result.de_corr_kj);
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Determinant-space toolkit for correlated adsorption energies"};
    app.require_subcommand(1);

    // fci
    auto* fci = app.add_subcommand("fci", "Sector ground state by iterative diagonalization");
    CommonOpts fci_common;
    std::string fci_dump;
    int fci_na = -1, fci_nb = -1;
    double fci_tol = 1e-9;
    bool fci_save = false;
    add_common(fci, fci_common);
    fci->add_option("--fcidump", fci_dump, "Integral file");
    fci->add_option("--n-alpha", fci_na, "Alpha electron count (default from header)");
    fci->add_option("--n-beta", fci_nb, "Beta electron count (default from header)");
    fci->add_option("--tol", fci_tol, "Residual norm target");
    fci->add_flag("--save-vector", fci_save, "Write the ground-state amplitudes");
    fci->callback([&] { cmd_fci(fci, fci_common, fci_dump, fci_na, fci_nb, fci_tol, fci_save); });

    // active-space
    auto* act = app.add_subcommand("active-space",
                                   "Correlation-density-truncated active space construction");
    CommonOpts act_common;
    std::string act_dump;
    std::vector<int> act_select;
    double act_threshold = 1e-4;
    std::vector<double> act_sweep;
    bool act_check = false;
    add_common(act, act_common);
    act->add_option("--fcidump", act_dump, "Integral file");
    act->add_option("--select", act_select, "Occupied orbitals kept active (default: all)")
        ->delimiter(',');
    act->add_option("--threshold", act_threshold, "Natural-occupation cutoff");
    act->add_option("--sweep", act_sweep, "Cutoff list; overrides --threshold")->delimiter(',');
    act->add_flag("--fci-check", act_check, "Also diagonalize parent and active problems");
    act->callback([&] {
        cmd_active_space(act, act_common, act_dump, act_select, act_threshold, act_sweep,
                         act_check);
    });

    // vqe
    auto* vqe = app.add_subcommand("vqe", "Variational fabric optimization with basin hopping");
    CommonOpts vqe_common;
    std::string vqe_dump, vqe_fabric;
    int vqe_layers = 4, vqe_hops = 10, vqe_na = -1, vqe_nb = -1;
    double vqe_perturb = 0.5, vqe_temp = 0.008;
    double vqe_epsp = 1e-4, vqe_epse = 1e-7;
    bool vqe_fci = false, vqe_prune = false;
    add_common(vqe, vqe_common);
    vqe->add_option("--fcidump", vqe_dump, "Integral file");
    vqe->add_option("--layers", vqe_layers, "Brickwork layers for a fresh fabric");
    vqe->add_option("--hops", vqe_hops, "Basin-hopping jumps (0 = single relaxation)");
    vqe->add_option("--perturb", vqe_perturb, "Jump amplitude (radians)");
    vqe->add_option("--temperature", vqe_temp, "Metropolis temperature (Hartree)");
    vqe->add_option("--fabric", vqe_fabric, "Initial fabric file (instead of a fresh one)");
    vqe->add_flag("--fci-reference", vqe_fci, "Also compute the exact sector minimum");
    vqe->add_flag("--prune", vqe_prune, "Remove negligible gates after optimization");
    vqe->add_option("--prune-eps-param", vqe_epsp, "Small-angle removal cutoff");
    vqe->add_option("--prune-eps-energy", vqe_epse, "Energy-impact removal cutoff (Hartree)");
    vqe->add_option("--n-alpha", vqe_na, "Alpha electron count (default from header)");
    vqe->add_option("--n-beta", vqe_nb, "Beta electron count (default from header)");
    vqe->callback([&] {
        cmd_vqe(vqe, vqe_common, vqe_dump, vqe_layers, vqe_hops, vqe_perturb, vqe_temp, vqe_fci,
                vqe_fabric, vqe_prune, vqe_epsp, vqe_epse, vqe_na, vqe_nb);
    });

    // sample
    auto* smp = app.add_subcommand("sample", "Measure a prepared state into a sample file");
    CommonOpts smp_common;
    std::string smp_dump, smp_fabric;
    std::uint64_t smp_shots = 100000;
    bool smp_fci = false;
    double smp_flip = 0.0, smp_anoise = 0.0;
    int smp_na = -1, smp_nb = -1;
    add_common(smp, smp_common);
    smp->add_option("--fcidump", smp_dump, "Integral file");
    smp->add_option("--shots", smp_shots, "Number of measurements");
    smp->add_option("--fabric", smp_fabric, "State source: fabric file");
    smp->add_flag("--from-fci", smp_fci, "State source: exact sector ground state");
    smp->add_option("--readout-flip", smp_flip, "Per-qubit readout flip probability");
    smp->add_option("--amplitude-noise", smp_anoise, "Amplitude perturbation strength");
    smp->add_option("--n-alpha", smp_na, "Alpha electron count (default from header)");
    smp->add_option("--n-beta", smp_nb, "Beta electron count (default from header)");
    smp->callback([&] {
        cmd_sample(smp, smp_common, smp_dump, smp_shots, smp_fabric, smp_fci, smp_flip,
                   smp_anoise, smp_na, smp_nb);
    });

    // sqd
    auto* sqd = app.add_subcommand(
        "sqd", "Sample-based diagonalization with configuration recovery");
    CommonOpts sqd_common;
    std::string sqd_dump, sqd_samples, sqd_fabric;
    std::uint64_t sqd_shots = 100000;
    bool sqd_fci_src = false, sqd_want_fci = false;
    double sqd_flip = 0.0, sqd_anoise = 0.0, sqd_etol = 1e-6;
    int sqd_rounds = 10, sqd_na = -1, sqd_nb = -1;
    add_common(sqd, sqd_common);
    sqd->add_option("--fcidump", sqd_dump, "Integral file");
    sqd->add_option("--samples", sqd_samples, "Existing sample file (skips sampling)");
    sqd->add_option("--shots", sqd_shots, "Number of measurements when sampling here");
    sqd->add_option("--fabric", sqd_fabric, "State source: fabric file");
    sqd->add_flag("--from-fci", sqd_fci_src, "State source: exact sector ground state");
    sqd->add_option("--readout-flip", sqd_flip, "Per-qubit readout flip probability");
    sqd->add_option("--amplitude-noise", sqd_anoise, "Amplitude perturbation strength");
    sqd->add_option("--rounds", sqd_rounds, "Maximum recovery rounds");
    sqd->add_option("--energy-tol", sqd_etol, "Round-to-round convergence (Hartree)");
    sqd->add_flag("--fci-reference", sqd_want_fci, "Also compute the exact sector minimum");
    sqd->add_option("--n-alpha", sqd_na, "Alpha electron count (default from header)");
    sqd->add_option("--n-beta", sqd_nb, "Beta electron count (default from header)");
    sqd->callback([&] {
        cmd_sqd(sqd, sqd_common, sqd_dump, sqd_samples, sqd_shots, sqd_fabric, sqd_fci_src,
                sqd_flip, sqd_anoise, sqd_rounds, sqd_etol, sqd_want_fci, sqd_na, sqd_nb);
    });

    // adsorption
    auto* ads = app.add_subcommand("adsorption",
                                   "Host + molecule - complex energy differences");
    CommonOpts ads_common;
    std::string ads_ledger, ads_host, ads_molecule, ads_complex, ads_method = "fci";
    add_common(ads, ads_common);
    ads->add_option("--ledger", ads_ledger, "Precomputed energy ledger (JSON)");
    ads->add_option("--host", ads_host, "Host integral file");
    ads->add_option("--molecule", ads_molecule, "Molecule integral file");
    ads->add_option("--complex", ads_complex, "Complex integral file");
    ads->add_option("--method", ads_method, "Correlation treatment: hf or fci");
    ads->callback([&] {
        cmd_adsorption(ads, ads_common, ads_ledger, ads_host, ads_molecule, ads_complex,
                       ads_method);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace asq
