#include "asq/embedding.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "asq/errors.hpp"

namespace asq {

double embedded_correlation(double e_m1_as, double e_m2_full, double e_m2_as) {
    return e_m1_as + e_m2_full - e_m2_as;
}

double embedded_correlation(const SystemEnergies& s) {
    return embedded_correlation(s.e_m1_as, s.e_m2_full, s.e_m2_as);
}

double total_energy(const SystemEnergies& s) { return s.e_hf + embedded_correlation(s); }

AdsorptionResult adsorption_energy(const AdsorptionLedger& l) {
    AdsorptionResult r;
    double de_hf = l.host.e_hf + l.molecule.e_hf - l.complex_.e_hf;
    double de_corr = embedded_correlation(l.host) + embedded_correlation(l.molecule) -
                     embedded_correlation(l.complex_);
    r.de_hf_kj = de_hf * kj_per_mol_per_hartree;
    r.de_corr_kj = de_corr * kj_per_mol_per_hartree;
    r.de_total_kj = r.de_hf_kj + r.de_corr_kj;
    return r;
}

nlohmann::json to_json(const SystemEnergies& s) {
    return nlohmann::json{{"e_hf", s.e_hf},
                          {"e_m1_as", s.e_m1_as},
                          {"e_m2_full", s.e_m2_full},
                          {"e_m2_as", s.e_m2_as}};
}

nlohmann::json to_json(const AdsorptionLedger& l) {
    return nlohmann::json{{"host", to_json(l.host)},
                          {"molecule", to_json(l.molecule)},
                          {"complex", to_json(l.complex_)}};
}

nlohmann::json to_json(const AdsorptionResult& r) {
    return nlohmann::json{{"de_hf_kj_per_mol", r.de_hf_kj},
                          {"de_corr_kj_per_mol", r.de_corr_kj},
                          {"de_total_kj_per_mol", r.de_total_kj}};
}

SystemEnergies system_energies_from_json(const nlohmann::json& j) {
    SystemEnergies s;
    try {
        s.e_hf = j.at("e_hf").get<double>();
        s.e_m1_as = j.value("e_m1_as", 0.0);
        s.e_m2_full = j.value("e_m2_full", 0.0);
        s.e_m2_as = j.value("e_m2_as", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("system energies: ") + e.what());
    }
    return s;
}

AdsorptionLedger ledger_from_json(const nlohmann::json& j) {
    AdsorptionLedger l;
    try {
        l.host = system_energies_from_json(j.at("host"));
        l.molecule = system_energies_from_json(j.at("molecule"));
        l.complex_ = system_energies_from_json(j.at("complex"));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("adsorption ledger: ") + e.what());
    }
    return l;
}

AdsorptionLedger ledger_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open ledger file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("ledger JSON: ") + e.what());
    }
    return ledger_from_json(j);
}

void write_adsorption_csv(const AdsorptionLedger& l, const AdsorptionResult& r,
                          std::ostream& out) {
    auto row = [&out](const char* name, const SystemEnergies& s) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%.12e,%.12e,%.12e,%.12e,%.12e\n", name, s.e_hf,
                      s.e_m1_as, s.e_m2_full, s.e_m2_as, embedded_correlation(s));
        out << buf;
    };
    out << "system,e_hf_ha,e_m1_as_ha,e_m2_full_ha,e_m2_as_ha,e_corr_embedded_ha\n";
    row("host", l.host);
    row("molecule", l.molecule);
    row("complex", l.complex_);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "delta_kj_per_mol,%.6f,%.6f,%.6f\n", r.de_hf_kj,
                  r.de_corr_kj, r.de_total_kj);
    out << "\nquantity,de_hf,de_corr,de_total\n" << buf;
}

}  // namespace asq
