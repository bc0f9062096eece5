#include "asq/sqd.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "asq/errors.hpp"
#include "asq/rng.hpp"

namespace asq {

namespace {

constexpr int kSampleShards = 16;  // fixed so results don't depend on thread count

}  // namespace

SampleSet sample_bitstrings(const CIVector& v, std::uint64_t n_shots, std::uint64_t seed,
                            const SamplingNoise& noise, int n_threads) {
    if (!v.space) throw InvalidInput("sample_bitstrings: vector has no determinant space");
    if (std::abs(v.amp.norm() - 1.0) > 1e-10)
        throw InvalidInput("sample_bitstrings: state must be normalized");
    if (noise.readout_flip < 0.0 || noise.readout_flip > 1.0)
        throw InvalidInput("sample_bitstrings: readout flip probability outside [0, 1]");
    const DeterminantSpace& sp = *v.space;
    const int n_orb = sp.n_orb();
    if (2 * n_orb > 63)
        throw InvalidInput("sample_bitstrings: register too wide for 64-bit strings");

    // Amplitude perturbation (stream 0), applied once before sharding.
    Eigen::VectorXd amp = v.amp;
    if (noise.amplitude_noise > 0.0) {
        Rng g = Rng::stream(seed, 0);
        const double scale = noise.amplitude_noise / std::sqrt(static_cast<double>(amp.size()));
        for (Eigen::Index i = 0; i < amp.size(); ++i) amp(i) += scale * g.normal();
        double nrm = amp.norm();
        if (nrm == 0.0) throw InvalidInput("sample_bitstrings: noise annihilated the state");
        amp /= nrm;
    }

    // Cumulative distribution over determinants in layout order.
    std::vector<double> cdf(static_cast<std::size_t>(amp.size()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < amp.size(); ++i) {
        acc += amp(i) * amp(i);
        cdf[static_cast<std::size_t>(i)] = acc;
    }
    for (double& c : cdf) c /= acc;
    cdf.back() = 1.0;

    // Precompute the packed noise-free bitstring of every determinant.
    std::vector<std::uint64_t> packed(cdf.size());
    for (std::size_t i = 0; i < packed.size(); ++i) {
        auto [a, b] = sp.determinant(i);
        packed[i] = pack_configuration(a, b, n_orb);
    }

    const int n_qubits = 2 * n_orb;
    std::vector<std::map<std::uint64_t, std::uint64_t>> shard_counts(kSampleShards);
    auto run_shard = [&](int shard) {
        std::uint64_t shots = n_shots / kSampleShards +
                              (static_cast<std::uint64_t>(shard) < n_shots % kSampleShards ? 1 : 0);
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(shard) + 1);
        auto& counts = shard_counts[static_cast<std::size_t>(shard)];
        for (std::uint64_t t = 0; t < shots; ++t) {
            double u = rng.uniform();
            std::size_t idx = static_cast<std::size_t>(
                std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            if (idx >= cdf.size()) idx = cdf.size() - 1;
            std::uint64_t x = packed[idx];
            if (noise.readout_flip > 0.0)
                for (int qb = 0; qb < n_qubits; ++qb)
                    if (rng.uniform() < noise.readout_flip) x ^= std::uint64_t{1} << qb;
            ++counts[x];
        }
    };

    n_threads = std::max(1, n_threads);
    if (n_threads == 1) {
        for (int shard = 0; shard < kSampleShards; ++shard) run_shard(shard);
    } else {
        std::vector<std::thread> pool;
        std::atomic_int next{0};
        int workers = std::min(n_threads, kSampleShards);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int shard = next.fetch_add(1); shard < kSampleShards;
                     shard = next.fetch_add(1))
                    run_shard(shard);
            });
        for (auto& th : pool) th.join();
    }

    SampleSet out;
    out.n_orb = n_orb;
    out.n_qubits = n_qubits;
    out.total_shots = n_shots;
    for (const auto& counts : shard_counts)  // deterministic merge, shard order
        for (const auto& [x, c] : counts) out.counts[x] += c;
    return out;
}

HammingHistogram hamming_histogram(const SampleSet& s) {
    HammingHistogram h;
    const SpinString mask = (SpinString{1} << s.n_orb) - 1;
    for (const auto& [x, c] : s.counts) {
        int wa = std::popcount(x & mask);
        int wb = std::popcount((x >> s.n_orb) & mask);
        auto bump = [c](HammingBin& bin) {
            bin.unique_strings += 1;
            bin.shots += c;
        };
        bump(h.total[wa + wb]);
        bump(h.alpha[wa]);
        bump(h.beta[wb]);
    }
    return h;
}

SampleSet postselect(const SampleSet& s, int n_alpha, int n_beta) {
    SampleSet out;
    out.n_orb = s.n_orb;
    out.n_qubits = s.n_qubits;
    const SpinString mask = (SpinString{1} << s.n_orb) - 1;
    for (const auto& [x, c] : s.counts) {
        if (std::popcount(x & mask) != n_alpha) continue;
        if (std::popcount((x >> s.n_orb) & mask) != n_beta) continue;
        out.counts[x] = c;
        out.total_shots += c;
    }
    return out;
}

namespace {

// Repair one spin block to the target weight: flip the off-count bits chosen
// without replacement, probability of each candidate proportional to how far
// its sampled value sits from the average occupation.
SpinString repair_block(SpinString m, const Eigen::VectorXd& occ, int target, Rng& rng,
                        double delta) {
    const int n = static_cast<int>(occ.size());
    int w = std::popcount(m);
    if (w == target) return m;
    const bool drop = w > target;  // flip 1 -> 0
    std::vector<int> cand;
    std::vector<double> weight;
    for (int p = 0; p < n; ++p) {
        bool bit = (m >> p) & 1;
        if (bit != drop) continue;
        cand.push_back(p);
        weight.push_back(std::abs((bit ? 1.0 : 0.0) - occ(p)) + delta);
    }
    int flips = drop ? w - target : target - w;
    for (int k = 0; k < flips; ++k) {
        double total = std::accumulate(weight.begin(), weight.end(), 0.0);
        double u = rng.uniform() * total;
        std::size_t pick = 0;
        double run = 0.0;
        for (; pick + 1 < cand.size(); ++pick) {
            run += weight[pick];
            if (u < run) break;
        }
        m ^= SpinString{1} << cand[pick];
        cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(pick));
        weight.erase(weight.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return m;
}

}  // namespace

std::vector<Configuration> recover_configurations(const SampleSet& s, const Occupations& occ,
                                                  int n_alpha, int n_beta, std::uint64_t seed,
                                                  double delta) {
    if (occ.alpha.size() != s.n_orb || occ.beta.size() != s.n_orb)
        throw InvalidInput("recover_configurations: occupation vectors have wrong length");
    if (n_alpha < 0 || n_alpha > s.n_orb || n_beta < 0 || n_beta > s.n_orb)
        throw InvalidInput("recover_configurations: electron counts out of range");
    Rng rng(seed);
    std::vector<Configuration> out;
    out.reserve(s.counts.size());
    for (const auto& [x, c] : s.counts) {  // ascending string order
        auto [a, b] = unpack_configuration(x, s.n_orb);
        a = repair_block(a, occ.alpha, n_alpha, rng, delta);
        b = repair_block(b, occ.beta, n_beta, rng, delta);
        out.emplace_back(a, b);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

// <D_I| H |D_J> by the usual excitation-rank rules over spin strings.
double sc_element(const Configuration& di, const Configuration& dj, const IntegralSet& ints) {
    const auto [ia, ib] = di;
    const auto [ja, jb] = dj;
    int da = std::popcount(ia ^ ja) / 2;
    int db = std::popcount(ib ^ jb) / 2;
    if (da + db > 2) return 0.0;

    auto occ_of = [](SpinString m) { return occupied_list(m); };

    if (da == 0 && db == 0) {
        double e = ints.e_core;
        auto oa = occ_of(ia), ob = occ_of(ib);
        for (int p : oa) e += ints.h(p, p);
        for (int p : ob) e += ints.h(p, p);
        for (int p : oa)
            for (int q : oa) e += 0.5 * (ints.eri(p, p, q, q) - ints.eri(p, q, q, p));
        for (int p : ob)
            for (int q : ob) e += 0.5 * (ints.eri(p, p, q, q) - ints.eri(p, q, q, p));
        for (int p : oa)
            for (int q : ob) e += ints.eri(p, p, q, q);
        return e;
    }

    // Orbitals entering/leaving one spin string.
    auto diff_pair = [](SpinString to, SpinString from) {
        return std::pair<std::vector<int>, std::vector<int>>{occupied_list(to & ~from),
                                                             occupied_list(from & ~to)};
    };

    if (da == 1 && db == 0) {
        auto [in_a, out_a] = diff_pair(ia, ja);
        int p = in_a[0], q = out_a[0];
        double sign = excitation_phase(ja, p, q);
        double e = ints.h(p, q);
        SpinString common = ia & ja;
        for (int r : occ_of(common)) e += ints.eri(p, q, r, r) - ints.eri(p, r, r, q);
        for (int r : occ_of(jb)) e += ints.eri(p, q, r, r);
        return sign * e;
    }
    if (da == 0 && db == 1) {
        auto [in_b, out_b] = diff_pair(ib, jb);
        int p = in_b[0], q = out_b[0];
        double sign = excitation_phase(jb, p, q);
        double e = ints.h(p, q);
        SpinString common = ib & jb;
        for (int r : occ_of(common)) e += ints.eri(p, q, r, r) - ints.eri(p, r, r, q);
        for (int r : occ_of(ja)) e += ints.eri(p, q, r, r);
        return sign * e;
    }
    if (da == 1 && db == 1) {
        auto [in_a, out_a] = diff_pair(ia, ja);
        auto [in_b, out_b] = diff_pair(ib, jb);
        double sign = excitation_phase(ja, in_a[0], out_a[0]) *
                      excitation_phase(jb, in_b[0], out_b[0]);
        return sign * ints.eri(in_a[0], out_a[0], in_b[0], out_b[0]);
    }
    if (da == 2 && db == 0) {
        auto [in_a, out_a] = diff_pair(ia, ja);
        int p1 = in_a[0], p2 = in_a[1], q1 = out_a[0], q2 = out_a[1];
        SpinString mid = (ja ^ (SpinString{1} << q1)) | (SpinString{1} << p1);
        double sign = excitation_phase(ja, p1, q1) * excitation_phase(mid, p2, q2);
        return sign * (ints.eri(p1, q1, p2, q2) - ints.eri(p1, q2, p2, q1));
    }
    // da == 0 && db == 2
    auto [in_b, out_b] = diff_pair(ib, jb);
    int p1 = in_b[0], p2 = in_b[1], q1 = out_b[0], q2 = out_b[1];
    SpinString mid = (jb ^ (SpinString{1} << q1)) | (SpinString{1} << p1);
    double sign = excitation_phase(jb, p1, q1) * excitation_phase(mid, p2, q2);
    return sign * (ints.eri(p1, q1, p2, q2) - ints.eri(p1, q2, p2, q1));
}

}  // namespace

SubspaceResult subspace_diagonalize(const std::vector<Configuration>& configs,
                                    const IntegralSet& ints, const DavidsonOptions& opts) {
    if (configs.empty()) throw InvalidInput("subspace_diagonalize: empty configuration list");
    std::vector<Configuration> dets = configs;
    std::sort(dets.begin(), dets.end());
    dets.erase(std::unique(dets.begin(), dets.end()), dets.end());
    const std::size_t dim = dets.size();
    const int na = std::popcount(dets[0].first);
    const int nb = std::popcount(dets[0].second);
    for (const auto& [a, b] : dets)
        if (std::popcount(a) != na || std::popcount(b) != nb)
            throw InvalidInput("subspace_diagonalize: mixed particle sectors");

    SubspaceResult r;
    r.configs = dets;

    if (dim <= 1024) {
        Eigen::MatrixXd h(dim, dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = i; j < dim; ++j) {
                double e = sc_element(dets[i], dets[j], ints);
                h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = e;
                h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = e;
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        if (es.info() != Eigen::Success)
            throw ConvergenceError("subspace_diagonalize: dense eigensolver failed", 0.0, 0.0,
                                   0);
        r.energy = es.eigenvalues()(0);
        r.coeffs = es.eigenvectors().col(0);
        fix_global_sign(r.coeffs);
    } else {
        // Sparse rows + Davidson for large pools.
        std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(dim);
        Eigen::VectorXd diag(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                int da = std::popcount(dets[i].first ^ dets[j].first) / 2;
                int db = std::popcount(dets[i].second ^ dets[j].second) / 2;
                if (da + db > 2) continue;
                double e = sc_element(dets[i], dets[j], ints);
                if (i == j) diag(static_cast<Eigen::Index>(i)) = e;
                if (e != 0.0) rows[i].push_back({static_cast<std::uint32_t>(j), e});
            }
        }
        auto apply = [&rows](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
            out.setZero(v.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                double acc = 0.0;
                for (const auto& [j, e] : rows[i]) acc += e * v(j);
                out(static_cast<Eigen::Index>(i)) = acc;
            }
        };
        EigenResult er = davidson_lowest(apply, static_cast<Eigen::Index>(dim), diag,
                                         broad_davidson_guess(diag), opts);
        r.energy = er.energy;
        r.coeffs = std::move(er.vector);
    }

    r.occupations.alpha = Eigen::VectorXd::Zero(ints.n_orb);
    r.occupations.beta = Eigen::VectorXd::Zero(ints.n_orb);
    for (std::size_t i = 0; i < dim; ++i) {
        double w = r.coeffs(static_cast<Eigen::Index>(i));
        w *= w;
        for (int p : occupied_list(dets[i].first)) r.occupations.alpha(p) += w;
        for (int p : occupied_list(dets[i].second)) r.occupations.beta(p) += w;
    }
    r.s_squared = s_squared(dets, r.coeffs, ints.n_orb);
    return r;
}

SqdResult sqd_run(const SampleSet& samples, const IntegralSet& ints, const SqdOptions& opts) {
    if (samples.n_orb != ints.n_orb)
        throw InvalidInput("sqd_run: sample register does not match the integrals");
    SqdResult r;
    r.postselected = postselect(samples, opts.n_alpha, opts.n_beta);
    r.postselect_empty = r.postselected.counts.empty();

    std::vector<Configuration> pool;
    Occupations occ;
    if (!r.postselect_empty) {
        for (const auto& [x, c] : r.postselected.counts)
            pool.push_back(unpack_configuration(x, samples.n_orb));
        SubspaceResult round0 = subspace_diagonalize(pool, ints, opts.eig);
        r.rounds.push_back({round0.energy, round0.configs.size(), round0.s_squared});
        occ = round0.occupations;
        pool = std::move(round0.configs);
        r.final_state = SubspaceResult();  // filled below
        r.final_energy = round0.energy;
    } else {
        // No usable strings yet: start from the uniform filling fraction.
        occ.alpha = Eigen::VectorXd::Constant(ints.n_orb,
                                              static_cast<double>(opts.n_alpha) / ints.n_orb);
        occ.beta = Eigen::VectorXd::Constant(ints.n_orb,
                                             static_cast<double>(opts.n_beta) / ints.n_orb);
    }

    SubspaceResult last;
    bool have_last = false;
    double prev_energy = r.rounds.empty() ? 0.0 : r.rounds.back().energy;
    bool have_prev = !r.rounds.empty();
    for (int round = 1; round <= opts.max_rounds; ++round) {
        std::vector<Configuration> rec = recover_configurations(
            samples, occ, opts.n_alpha, opts.n_beta, Rng::stream(opts.seed, 1000 + round).next_u64());
        pool.insert(pool.end(), rec.begin(), rec.end());
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

        SubspaceResult sr = subspace_diagonalize(pool, ints, opts.eig);
        r.rounds.push_back({sr.energy, sr.configs.size(), sr.s_squared});
        occ = sr.occupations;
        r.recovery_rounds = round;
        double e = sr.energy;
        last = std::move(sr);
        have_last = true;
        if (have_prev && std::abs(prev_energy - e) < opts.energy_tol) {
            r.converged = true;
            prev_energy = e;
            break;
        }
        prev_energy = e;
        have_prev = true;
    }

    if (have_last) {
        r.final_state = std::move(last);
    } else if (!r.postselect_empty) {
        // max_rounds == 0: report the postselection-only state.
        r.final_state = subspace_diagonalize(pool, ints, opts.eig);
    } else {
        throw InvalidInput("sqd_run: no valid strings and no recovery rounds requested");
    }
    r.final_energy = r.final_state.energy;
    return r;
}

nlohmann::json sample_set_to_json(const SampleSet& s) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [x, c] : s.counts) counts[mask_to_string(x, s.n_qubits)] = c;
    return nlohmann::json{{"n_orb", s.n_orb},
                          {"n_qubits", s.n_qubits},
                          {"total_shots", s.total_shots},
                          {"counts", counts}};
}

SampleSet sample_set_from_json(const nlohmann::json& j) {
    SampleSet s;
    try {
        s.n_orb = j.at("n_orb").get<int>();
        s.n_qubits = j.at("n_qubits").get<int>();
        s.total_shots = j.at("total_shots").get<std::uint64_t>();
        for (const auto& [key, val] : j.at("counts").items()) {
            if (static_cast<int>(key.size()) != s.n_qubits)
                throw ParseError("sample set: string '" + key + "' has wrong length");
            s.counts[mask_from_string(key)] = val.get<std::uint64_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("sample set JSON: ") + e.what());
    }
    if (s.n_qubits != 2 * s.n_orb) throw ParseError("sample set: n_qubits must equal 2*n_orb");
    return s;
}

void save_sample_set_file(const SampleSet& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << sample_set_to_json(s).dump(2) << '\n';
}

SampleSet sample_set_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open sample set file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("sample set JSON: ") + e.what());
    }
    return sample_set_from_json(j);
}

}  // namespace asq
