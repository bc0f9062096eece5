#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

namespace asq {

// Unit conversion for reporting; energies are carried in Hartree internally.
inline constexpr double kj_per_mol_per_hartree = 2625.4996;

// Energy decomposition for one system (host framework, free molecule, or the
// bound complex): a mean-field reference plus correlation energies from a
// primary method (in a reduced active space) and a secondary method (both in
// the full space and in the same active space).  All values in Hartree.
struct SystemEnergies {
    double e_hf = 0.0;       // mean-field reference energy
    double e_m1_as = 0.0;    // primary-method correlation, active space
    double e_m2_full = 0.0;  // secondary-method correlation, full space
    double e_m2_as = 0.0;    // secondary-method correlation, active space
};

// Embedded correlation energy: active-space primary correlation plus the
// secondary method's out-of-space remainder,
//   e_m1_as + e_m2_full - e_m2_as.
double embedded_correlation(double e_m1_as, double e_m2_full, double e_m2_as);
double embedded_correlation(const SystemEnergies& s);

// Mean field + embedded correlation.
double total_energy(const SystemEnergies& s);

// The three systems of an adsorption calculation.
struct AdsorptionLedger {
    SystemEnergies host;
    SystemEnergies molecule;
    SystemEnergies complex_;
};

// Adsorption energies in kJ/mol with the sign convention that positive means
// binding is favorable: dE = E(host) + E(molecule) - E(complex).
struct AdsorptionResult {
    double de_hf_kj = 0.0;
    double de_corr_kj = 0.0;
    double de_total_kj = 0.0;
};

AdsorptionResult adsorption_energy(const AdsorptionLedger& l);

// JSON round trip for ledgers (keys: host/molecule/complex, each with
// e_hf/e_m1_as/e_m2_full/e_m2_as) and serialization of results.
nlohmann::json to_json(const SystemEnergies& s);
nlohmann::json to_json(const AdsorptionLedger& l);
nlohmann::json to_json(const AdsorptionResult& r);
SystemEnergies system_energies_from_json(const nlohmann::json& j);
AdsorptionLedger ledger_from_json(const nlohmann::json& j);
AdsorptionLedger ledger_from_file(const std::string& path);

// One row per system with its decomposition, then the delta row (kJ/mol).
void write_adsorption_csv(const AdsorptionLedger& l, const AdsorptionResult& r,
                          std::ostream& out);

}  // namespace asq
