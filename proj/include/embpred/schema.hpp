#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "embpred/types.hpp"

namespace embpred {

struct RawTable;

enum class ColumnKind { categorical, continuous, identifier, target };

// Column-level preprocessing directives.
//   log1p            apply ln(x+1) before standardization
//   drop             remove during feature selection (analysis said zero importance)
//   medication_level relabel Up/Down -> Yes, Steady/None/No -> No; counted by count_meds
//   diagnosis_code   ICD9 diagnosis column, participates in the 250.xx filter
//   engineered       synthesized by the pipeline, not expected in input files
enum class Directive { log1p, drop, medication_level, diagnosis_code, engineered };

const char* to_string(ColumnKind k);
const char* to_string(Directive d);
ColumnKind column_kind_from_string(std::string_view s);
Directive directive_from_string(std::string_view s);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  // Categorical only. Ordered; "nan" appears exactly once, appended last.
  std::vector<std::string> vocabulary;
  std::string missing_marker = "?";
  std::set<Directive> directives;

  bool has(Directive d) const { return directives.count(d) > 0; }
  Index cardinality() const { return static_cast<Index>(vocabulary.size()); }

  // Vocabulary index of a raw cell; missing markers and unseen values map to "nan".
  Index vocab_index(const std::string& value) const;
};

struct DatasetSchema {
  std::vector<ColumnSpec> columns;
  std::string patient_id_column;
  std::string encounter_id_column;
  std::string target_column;
  std::vector<std::string> diagnosis_columns;
  std::string discharge_column = "discharge_disposition_id";
  std::set<std::string> death_disposition_codes;

  const ColumnSpec* find(const std::string& name) const;
  const ColumnSpec& at(const std::string& name) const;  // throws ValidationError
  bool has_column(const std::string& name) const { return find(name) != nullptr; }

  // Checks every structural invariant; throws ValidationError with the offending name.
  void validate() const;
};

DatasetSchema load_schema(const std::string& path);
void save_schema(const DatasetSchema& schema, const std::string& path);

DatasetSchema schema_from_json_text(const std::string& text);
std::string schema_to_json_text(const DatasetSchema& schema, int indent = 2);

// Fills every categorical vocabulary with the sorted distinct observed values
// plus the synthetic "nan" category (appended last). Columns absent from the
// table keep their existing vocabulary. Idempotent and row-order independent.
DatasetSchema build_vocabularies(const RawTable& table, const DatasetSchema& schema);

}  // namespace embpred
