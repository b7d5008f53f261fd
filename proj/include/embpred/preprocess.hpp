#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "embpred/schema.hpp"
#include "embpred/table.hpp"
#include "embpred/types.hpp"

namespace embpred {

// Standardization record for one continuous column. `mean`/`std` are the fit
// statistics applied at inference; `median` is the imputation fill value in
// original units (pre-log1p).
struct ContStat {
  std::string name;
  double median = 0.0;
  double mean = 0.0;
  double std = 1.0;
  bool log1p_applied = false;
  bool standardized = false;

  bool operator==(const ContStat&) const = default;
};

// Fully numeric dataset: integer-coded categoricals, real continuous columns,
// binary target (1 = readmitted within 30 days).
struct EncodedMatrix {
  MatXi cat;    // rows x n_categorical, vocabulary indices
  MatXd cont;   // rows x n_continuous
  VecXi target; // rows, values in {0,1}
  std::vector<std::pair<std::string, Index>> cat_specs;  // (name, cardinality)
  std::vector<ContStat> cont_stats;

  Index rows() const { return target.size(); }
  Index n_cat() const { return static_cast<Index>(cat_specs.size()); }
  Index n_cont() const { return static_cast<Index>(cont_stats.size()); }

  Index cat_col(const std::string& name) const;   // -1 when absent
  Index cont_col(const std::string& name) const;  // -1 when absent
};

// Row subset in the given index order.
EncodedMatrix take_rows(const EncodedMatrix& m, std::span<const Index> idx);

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // row -> fold id in [0, k)

  std::vector<Index> fold_rows(int fold) const;
  std::vector<Index> complement_rows(int fold) const;
};

// --- §-style row pipeline (strings in, strings out, schema-driven) ---

// Categorical missing markers -> "nan"; continuous missing -> column median
// over the non-missing values.
RawTable impute_missing(const RawTable& table, const DatasetSchema& schema);

// One row per patient: the encounter with the smallest encounter id. Survivor
// order follows the input.
RawTable keep_first_encounter(const RawTable& table, const DatasetSchema& schema);

struct FilterCounts {
  Index dropped_not_diabetes = 0;
  Index dropped_death = 0;
};

// Keeps rows with an ICD9 250.xx code in any diagnosis column, then removes
// rows whose discharge disposition is a death/hospice code.
RawTable filter_diabetes_and_alive(const RawTable& table, const DatasetSchema& schema,
                                   FilterCounts* counts = nullptr);

// "250" exactly, or "250." followed by anything.
bool is_diabetes_code(std::string_view code);

// "<30" -> 1, ">30" -> 0, "NO" -> 0; anything else throws.
int encode_target(const std::string& value);

// Medication levels to Yes/No; HbA1c and glucose serum levels to
// normal/abnormal/not tested. Missing markers pass through untouched.
RawTable relabel_levels(const RawTable& table, const DatasetSchema& schema);

// Adds the engineered continuous columns declared by the schema:
// service_utilization (inpatient + outpatient + emergency visits) and
// count_meds (number of medication columns equal to "Yes").
RawTable synthesize_features(const RawTable& table, const DatasetSchema& schema);

struct DroppedColumn {
  std::string name;
  std::string reason;
};

// Drops feature columns that are >50% missing, categoricals with a single
// observed value, and columns carrying the drop directive.
RawTable select_features(const RawTable& table, const DatasetSchema& schema,
                         std::vector<DroppedColumn>* dropped = nullptr);

// Strings -> numbers. Requires built vocabularies; unseen categories map to
// the "nan" index. Continuous columns are parsed but not yet transformed.
EncodedMatrix encode(const RawTable& table, const DatasetSchema& schema);

// log1p on flagged columns, then z-scoring with statistics fit on `fit_rows`
// (all rows when empty). Population standard deviation; constant columns map
// to zero via an epsilon guard.
EncodedMatrix transform_and_standardize(const EncodedMatrix& matrix, const DatasetSchema& schema,
                                        std::span<const Index> fit_rows = {});

// Re-applies previously fit statistics (model-side path used at inference).
EncodedMatrix apply_cont_stats(const EncodedMatrix& matrix, const std::vector<ContStat>& stats);

// Stratified k-fold assignment: seeded shuffle per class, then round-robin.
// Fold sizes differ by at most one, as do per-fold positive counts.
FoldPlan plan_folds(const VecXi& labels, int k, std::uint64_t seed);

// --- composed pipeline ---

struct PreprocessReport {
  Index rows_in = 0;
  Index rows_after_dedup = 0;
  Index rows_after_diabetes_filter = 0;
  Index rows_after_death_filter = 0;
  std::vector<DroppedColumn> dropped_columns;
  std::vector<std::pair<std::string, double>> imputation_medians;
  Index n_categorical = 0;
  Index n_continuous = 0;
  std::vector<std::pair<std::string, Index>> cat_cardinalities;

  std::string to_text() const;
};

struct PipelineResult {
  EncodedMatrix matrix;        // encoded, not standardized
  DatasetSchema schema;        // input schema with built vocabularies
  PreprocessReport report;
};

// Fixed order: dedup -> diabetes/alive filter -> relabel -> synthesize ->
// select -> impute -> vocabularies -> encode. Standardization is the caller's
// per-fold step.
PipelineResult run_pipeline(const RawTable& table, const DatasetSchema& schema);

}  // namespace embpred
