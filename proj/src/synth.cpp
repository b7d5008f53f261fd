#include "embpred/synth.hpp"

#include <string>
#include <unordered_set>
#include <vector>

#include "embpred/error.hpp"
#include "embpred/rng.hpp"

namespace embpred {

namespace {

const char* kRaces[] = {"Caucasian", "AfricanAmerican", "Asian", "Hispanic", "Other"};
const char* kGenders[] = {"Female", "Male"};
const char* kAges[] = {"[0-10)",  "[10-20)", "[20-30)", "[30-40)", "[40-50)",
                       "[50-60)", "[60-70)", "[70-80)", "[80-90)", "[90-100)"};
const char* kWeights[] = {"[50-75)", "[75-100)", "[100-125)", "[125-150)"};
const char* kPayers[] = {"MC", "MD", "HM", "BC", "SP", "CP", "UN", "OG"};
const char* kSpecialties[] = {"InternalMedicine", "Family/GeneralPractice", "Cardiology",
                              "Surgery-General", "Emergency/Trauma", "Orthopedics",
                              "Nephrology", "Radiologist", "Pulmonology", "Psychiatry",
                              "Endocrinology", "Gastroenterology"};
const char* kDiabetesCodes[] = {"250",    "250.01", "250.02", "250.1", "250.13", "250.4",
                                "250.6",  "250.7",  "250.8",  "250.83", "250.9"};
const char* kOtherCodes[] = {"401.9", "428.0",  "276.1", "414.01", "427.31", "599.0",
                             "496",   "403.9",  "585.9", "786.05", "V45.81", "38.93"};
const char* kAliveDispositions[] = {"1", "2", "3", "6", "18", "25"};
const char* kAdmissionTypes[] = {"1", "2", "3", "4", "5", "6", "7", "8"};
const char* kAdmissionSources[] = {"1", "2", "4", "5", "6", "7", "17", "20"};

template <std::size_t N>
const char* pick(Rng& rng, const char* (&pool)[N]) {
  return pool[rng.uniform_int(static_cast<std::int64_t>(N))];
}

std::string pick_death_code(Rng& rng, const DatasetSchema& schema) {
  std::vector<std::string> codes(schema.death_disposition_codes.begin(),
                                 schema.death_disposition_codes.end());
  if (codes.empty()) return "1";
  return codes[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(codes.size())))];
}

// Medication level draw; minority rows change medication more often.
std::string med_level(Rng& rng, bool minority) {
  const double u = rng.uniform();
  if (minority) {
    if (u < 0.20) return "Up";
    if (u < 0.35) return "Down";
    if (u < 0.53) return "Steady";
    return "No";
  }
  if (u < 0.055) return "Up";
  if (u < 0.10) return "Down";
  if (u < 0.30) return "Steady";
  return "No";
}

}  // namespace

RawTable generate_synthetic(const DatasetSchema& schema, Index n_rows, double minority_fraction,
                            std::uint64_t seed) {
  if (n_rows < 10) throw ValidationError("synthetic generation needs at least 10 rows");
  if (!(minority_fraction > 0.0 && minority_fraction < 1.0)) {
    throw ValidationError("minority fraction must lie in (0, 1)");
  }

  Rng rng = Rng(seed).stream("synth");

  RawTable table;
  for (const auto& col : schema.columns) {
    if (col.has(Directive::engineered)) continue;
    table.header.push_back(col.name);
  }

  constexpr double kDuplicatePatientFraction = 0.01;
  constexpr double kDeathFraction = 0.01;

  std::vector<std::string> patient_pool;
  patient_pool.reserve(static_cast<std::size_t>(n_rows));

  for (Index i = 0; i < n_rows; ++i) {
    const bool minority = rng.bernoulli(minority_fraction);
    const bool dead = rng.bernoulli(kDeathFraction);
    const bool duplicate = !patient_pool.empty() && rng.bernoulli(kDuplicatePatientFraction);

    std::string patient_id;
    if (duplicate) {
      patient_id = patient_pool[static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(patient_pool.size())))];
    } else {
      patient_id = std::to_string(5000000 + i);
      patient_pool.push_back(patient_id);
    }
    const std::string encounter_id = std::to_string(100000 + i * 7);

    // the diabetes code lands in a random diagnosis slot
    const int diabetes_slot = static_cast<int>(rng.uniform_int(3));

    // medication levels first: change/diabetesMed/count signals derive from them
    std::vector<std::pair<std::string, std::string>> med_values;
    bool any_change = false;
    for (const auto& col : schema.columns) {
      if (!col.has(Directive::medication_level)) continue;
      std::string level;
      if (col.name == "examide" || col.name == "citoglipton") {
        level = "No";  // single-valued in the source data
      } else {
        level = med_level(rng, minority);
      }
      if (level == "Up" || level == "Down") any_change = true;
      med_values.emplace_back(col.name, level);
    }

    std::vector<std::string> row;
    row.reserve(table.header.size());
    int diag_seen = 0;
    for (const auto& col : schema.columns) {
      if (col.has(Directive::engineered)) continue;
      const std::string& name = col.name;

      if (name == schema.patient_id_column) {
        row.push_back(patient_id);
      } else if (name == schema.encounter_id_column) {
        row.push_back(encounter_id);
      } else if (name == schema.target_column) {
        if (dead) {
          row.push_back("NO");
        } else if (minority) {
          row.push_back("<30");
        } else {
          row.push_back(rng.bernoulli(0.4) ? ">30" : "NO");
        }
      } else if (col.has(Directive::diagnosis_code)) {
        if (diag_seen == diabetes_slot) {
          row.push_back(pick(rng, kDiabetesCodes));
        } else if (rng.bernoulli(0.02)) {
          row.push_back("?");
        } else {
          row.push_back(pick(rng, kOtherCodes));
        }
        ++diag_seen;
      } else if (name == schema.discharge_column) {
        row.push_back(dead ? pick_death_code(rng, schema) : pick(rng, kAliveDispositions));
      } else if (name == "race") {
        row.push_back(rng.bernoulli(0.02) ? "?" : pick(rng, kRaces));
      } else if (name == "gender") {
        row.push_back(pick(rng, kGenders));
      } else if (name == "age") {
        row.push_back(pick(rng, kAges));
      } else if (name == "weight") {
        row.push_back(rng.bernoulli(0.96) ? "?" : pick(rng, kWeights));
      } else if (name == "payer_code") {
        row.push_back(rng.bernoulli(0.40) ? "?" : pick(rng, kPayers));
      } else if (name == "medical_specialty") {
        row.push_back(rng.bernoulli(0.45) ? "?" : pick(rng, kSpecialties));
      } else if (name == "admission_type_id") {
        row.push_back(pick(rng, kAdmissionTypes));
      } else if (name == "admission_source_id") {
        row.push_back(pick(rng, kAdmissionSources));
      } else if (name == "time_in_hospital") {
        row.push_back(std::to_string(1 + rng.poisson(3.0)));
      } else if (name == "num_lab_procedures") {
        row.push_back(std::to_string(1 + rng.poisson(40.0)));
      } else if (name == "num_procedures") {
        row.push_back(std::to_string(rng.poisson(1.3)));
      } else if (name == "num_medications") {
        row.push_back(std::to_string(1 + rng.poisson(14.0)));
      } else if (name == "number_outpatient") {
        row.push_back(std::to_string(rng.poisson(0.35)));
      } else if (name == "number_emergency") {
        row.push_back(std::to_string(rng.poisson(0.2)));
      } else if (name == "number_inpatient") {
        // planted signal
        row.push_back(std::to_string(minority ? 1 + rng.poisson(1.8) : rng.poisson(0.55)));
      } else if (name == "number_diagnoses") {
        row.push_back(std::to_string(1 + rng.poisson(6.0)));
      } else if (name == "max_glu_serum") {
        const double u = rng.uniform();
        row.push_back(u < 0.95 ? "None" : u < 0.97 ? "Norm" : u < 0.99 ? ">200" : ">300");
      } else if (name == "A1Cresult") {
        const double u = rng.uniform();
        row.push_back(u < 0.83 ? "None" : u < 0.88 ? "Norm" : u < 0.93 ? ">7" : ">8");
      } else if (name == "change") {
        row.push_back(any_change ? "Ch" : "No");
      } else if (name == "diabetesMed") {
        row.push_back(rng.bernoulli(0.77) ? "Yes" : "No");
      } else if (col.has(Directive::medication_level)) {
        for (const auto& [med, level] : med_values) {
          if (med == name) {
            row.push_back(level);
            break;
          }
        }
      } else if (col.kind == ColumnKind::categorical) {
        static const char* generic[] = {"a", "b", "c", "d"};
        row.push_back(rng.bernoulli(0.02) ? col.missing_marker : pick(rng, generic));
      } else {
        row.push_back(std::to_string(rng.poisson(3.0)));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace embpred
