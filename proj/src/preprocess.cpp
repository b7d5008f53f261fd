#include "embpred/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "embpred/error.hpp"
#include "embpred/rng.hpp"

namespace embpred {

namespace {

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_int64(const std::string& s, std::int64_t& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

bool is_missing(const std::string& cell, const ColumnSpec& spec) {
  return cell == spec.missing_marker;
}

}  // namespace

Index EncodedMatrix::cat_col(const std::string& name) const {
  for (std::size_t i = 0; i < cat_specs.size(); ++i) {
    if (cat_specs[i].first == name) return static_cast<Index>(i);
  }
  return -1;
}

Index EncodedMatrix::cont_col(const std::string& name) const {
  for (std::size_t i = 0; i < cont_stats.size(); ++i) {
    if (cont_stats[i].name == name) return static_cast<Index>(i);
  }
  return -1;
}

EncodedMatrix take_rows(const EncodedMatrix& m, std::span<const Index> idx) {
  EncodedMatrix out;
  out.cat_specs = m.cat_specs;
  out.cont_stats = m.cont_stats;
  const Index n = static_cast<Index>(idx.size());
  out.cat.resize(n, m.cat.cols());
  out.cont.resize(n, m.cont.cols());
  out.target.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Index r = idx[static_cast<std::size_t>(i)];
    if (m.cat.cols() > 0) out.cat.row(i) = m.cat.row(r);
    if (m.cont.cols() > 0) out.cont.row(i) = m.cont.row(r);
    out.target[i] = m.target[r];
  }
  return out;
}

std::vector<Index> FoldPlan::fold_rows(int fold) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::vector<Index> FoldPlan::complement_rows(int fold) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(static_cast<Index>(i));
  }
  return out;
}

RawTable impute_missing(const RawTable& table, const DatasetSchema& schema) {
  RawTable out = table;
  for (Index c = 0; c < table.column_count(); ++c) {
    const ColumnSpec* spec = schema.find(table.header[static_cast<std::size_t>(c)]);
    if (!spec) continue;
    if (spec->kind == ColumnKind::categorical) {
      for (auto& row : out.rows) {
        auto& cell = row[static_cast<std::size_t>(c)];
        if (cell == spec->missing_marker) cell = "nan";
      }
    } else if (spec->kind == ColumnKind::continuous) {
      std::vector<double> present;
      for (const auto& row : out.rows) {
        const auto& cell = row[static_cast<std::size_t>(c)];
        if (cell == spec->missing_marker) continue;
        double v = 0;
        if (!parse_double(cell, v)) {
          throw ValidationError("column " + spec->name + ": non-numeric value \"" + cell + "\"");
        }
        present.push_back(v);
      }
      bool any_missing = false;
      for (const auto& row : out.rows) {
        if (row[static_cast<std::size_t>(c)] == spec->missing_marker) {
          any_missing = true;
          break;
        }
      }
      if (!any_missing) continue;
      if (present.empty()) {
        throw ValidationError("column " + spec->name + ": all values missing, no median to impute");
      }
      const std::string fill = format_double(median_of(present));
      for (auto& row : out.rows) {
        auto& cell = row[static_cast<std::size_t>(c)];
        if (cell == spec->missing_marker) cell = fill;
      }
    }
  }
  return out;
}

RawTable keep_first_encounter(const RawTable& table, const DatasetSchema& schema) {
  const Index pcol = table.column_index(schema.patient_id_column);
  const Index ecol = table.column_index(schema.encounter_id_column);
  if (pcol < 0 || ecol < 0) {
    throw ValidationError("patient/encounter id column missing from table");
  }
  // patient id -> (min encounter id, row holding it)
  std::unordered_map<std::int64_t, std::pair<std::int64_t, Index>> best;
  for (Index r = 0; r < table.row_count(); ++r) {
    std::int64_t pid = 0, eid = 0;
    if (!parse_int64(table.cell(r, pcol), pid)) {
      throw ValidationError("row " + std::to_string(r + 1) + ": unparsable patient id \"" +
                            table.cell(r, pcol) + "\"");
    }
    if (!parse_int64(table.cell(r, ecol), eid)) {
      throw ValidationError("row " + std::to_string(r + 1) + ": unparsable encounter id \"" +
                            table.cell(r, ecol) + "\"");
    }
    auto it = best.find(pid);
    if (it == best.end() || eid < it->second.first) {
      best[pid] = {eid, r};
    }
  }
  RawTable out;
  out.header = table.header;
  for (Index r = 0; r < table.row_count(); ++r) {
    std::int64_t pid = 0;
    parse_int64(table.cell(r, pcol), pid);
    if (best.at(pid).second == r) out.rows.push_back(table.rows[static_cast<std::size_t>(r)]);
  }
  return out;
}

bool is_diabetes_code(std::string_view code) {
  if (code.size() < 3 || code.substr(0, 3) != "250") return false;
  return code.size() == 3 || code[3] == '.';
}

RawTable filter_diabetes_and_alive(const RawTable& table, const DatasetSchema& schema,
                                   FilterCounts* counts) {
  std::vector<Index> diag_cols;
  for (const auto& name : schema.diagnosis_columns) {
    const Index c = table.column_index(name);
    if (c >= 0) diag_cols.push_back(c);
  }
  const Index discharge_col = table.column_index(schema.discharge_column);

  FilterCounts local;
  RawTable out;
  out.header = table.header;
  for (Index r = 0; r < table.row_count(); ++r) {
    bool diabetes = false;
    for (Index c : diag_cols) {
      if (is_diabetes_code(table.cell(r, c))) {
        diabetes = true;
        break;
      }
    }
    if (!diabetes) {
      ++local.dropped_not_diabetes;
      continue;
    }
    if (discharge_col >= 0 &&
        schema.death_disposition_codes.count(table.cell(r, discharge_col)) > 0) {
      ++local.dropped_death;
      continue;
    }
    out.rows.push_back(table.rows[static_cast<std::size_t>(r)]);
  }
  if (counts) *counts = local;
  return out;
}

int encode_target(const std::string& value) {
  if (value == "<30") return 1;
  if (value == ">30" || value == "NO") return 0;
  throw ValidationError("unknown target value \"" + value + "\"");
}

namespace {

const std::unordered_map<std::string, std::string>& medication_map() {
  static const std::unordered_map<std::string, std::string> m = {
      {"Up", "Yes"}, {"Down", "Yes"}, {"Steady", "No"}, {"None", "No"}, {"No", "No"},
  };
  return m;
}

const std::unordered_map<std::string, std::string>& lab_level_map() {
  static const std::unordered_map<std::string, std::string> m = {
      {">7", "abnormal"},  {">8", "abnormal"},   {">200", "abnormal"},
      {">300", "abnormal"}, {"Norm", "normal"},  {"None", "not tested"},
  };
  return m;
}

}  // namespace

RawTable relabel_levels(const RawTable& table, const DatasetSchema& schema) {
  RawTable out = table;
  for (Index c = 0; c < table.column_count(); ++c) {
    const std::string& name = table.header[static_cast<std::size_t>(c)];
    const ColumnSpec* spec = schema.find(name);
    if (!spec) continue;

    const std::unordered_map<std::string, std::string>* map = nullptr;
    if (spec->has(Directive::medication_level)) {
      map = &medication_map();
    } else if (name == "A1Cresult" || name == "max_glu_serum") {
      map = &lab_level_map();
    }
    if (!map) continue;

    for (auto& row : out.rows) {
      auto& cell = row[static_cast<std::size_t>(c)];
      if (cell == spec->missing_marker || cell == "nan") continue;
      auto it = map->find(cell);
      if (it == map->end()) {
        throw ValidationError("column " + name + ": unmapped value \"" + cell + "\"");
      }
      cell = it->second;
    }
  }
  return out;
}

RawTable synthesize_features(const RawTable& table, const DatasetSchema& schema) {
  RawTable out = table;
  for (const auto& spec : schema.columns) {
    if (!spec.has(Directive::engineered)) continue;
    if (out.has_column(spec.name)) continue;

    std::vector<std::string> values;
    values.reserve(static_cast<std::size_t>(table.row_count()));

    if (spec.name == "service_utilization") {
      const char* parts[] = {"number_inpatient", "number_outpatient", "number_emergency"};
      std::vector<Index> cols;
      for (const char* p : parts) {
        const Index c = table.column_index(p);
        if (c < 0) throw ValidationError(std::string("service_utilization: missing column ") + p);
        cols.push_back(c);
      }
      for (Index r = 0; r < table.row_count(); ++r) {
        double sum = 0;
        for (Index c : cols) {
          double v = 0;
          if (!parse_double(table.cell(r, c), v)) {
            throw ValidationError("service_utilization: non-numeric visit count \"" +
                                  table.cell(r, c) + "\" at row " + std::to_string(r + 1));
          }
          sum += v;
        }
        values.push_back(format_double(sum));
      }
    } else if (spec.name == "count_meds") {
      std::vector<Index> med_cols;
      for (const auto& col : schema.columns) {
        if (!col.has(Directive::medication_level)) continue;
        const Index c = table.column_index(col.name);
        if (c >= 0) med_cols.push_back(c);
      }
      for (Index r = 0; r < table.row_count(); ++r) {
        Index yes = 0;
        for (Index c : med_cols) {
          if (table.cell(r, c) == "Yes") ++yes;
        }
        values.push_back(std::to_string(yes));
      }
    } else {
      throw ValidationError("engineered column " + spec.name + " has no synthesis rule");
    }

    out.header.push_back(spec.name);
    for (Index r = 0; r < out.row_count(); ++r) {
      out.rows[static_cast<std::size_t>(r)].push_back(values[static_cast<std::size_t>(r)]);
    }
  }
  return out;
}

RawTable select_features(const RawTable& table, const DatasetSchema& schema,
                         std::vector<DroppedColumn>* dropped) {
  std::vector<bool> keep(static_cast<std::size_t>(table.column_count()), true);
  std::vector<DroppedColumn> local;
  const double n = static_cast<double>(table.row_count());

  for (Index c = 0; c < table.column_count(); ++c) {
    const std::string& name = table.header[static_cast<std::size_t>(c)];
    const ColumnSpec* spec = schema.find(name);
    if (!spec) continue;
    if (spec->kind == ColumnKind::identifier || spec->kind == ColumnKind::target) continue;

    if (spec->has(Directive::drop)) {
      keep[static_cast<std::size_t>(c)] = false;
      local.push_back({name, "drop directive"});
      continue;
    }

    Index missing = 0;
    std::set<std::string> distinct;
    for (Index r = 0; r < table.row_count(); ++r) {
      const std::string& cell = table.cell(r, c);
      if (is_missing(cell, *spec)) {
        ++missing;
      } else if (spec->kind == ColumnKind::categorical) {
        distinct.insert(cell);
      }
    }
    if (n > 0 && static_cast<double>(missing) / n > 0.5) {
      keep[static_cast<std::size_t>(c)] = false;
      std::ostringstream reason;
      reason << "missing fraction " << (static_cast<double>(missing) / n);
      local.push_back({name, reason.str()});
      continue;
    }
    if (spec->kind == ColumnKind::categorical && distinct.size() <= 1) {
      keep[static_cast<std::size_t>(c)] = false;
      local.push_back({name, "observed cardinality " + std::to_string(distinct.size())});
    }
  }

  RawTable out;
  for (Index c = 0; c < table.column_count(); ++c) {
    if (keep[static_cast<std::size_t>(c)]) out.header.push_back(table.header[static_cast<std::size_t>(c)]);
  }
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    std::vector<std::string> r;
    r.reserve(out.header.size());
    for (Index c = 0; c < table.column_count(); ++c) {
      if (keep[static_cast<std::size_t>(c)]) r.push_back(row[static_cast<std::size_t>(c)]);
    }
    out.rows.push_back(std::move(r));
  }
  if (dropped) *dropped = std::move(local);
  return out;
}

EncodedMatrix encode(const RawTable& table, const DatasetSchema& schema) {
  EncodedMatrix out;
  std::vector<Index> cat_cols, cont_cols;
  Index target_col = -1;

  // schema order, restricted to the columns present in the table
  for (const auto& spec : schema.columns) {
    const Index c = table.column_index(spec.name);
    if (c < 0) continue;
    switch (spec.kind) {
      case ColumnKind::categorical:
        if (spec.vocabulary.empty()) {
          throw ValidationError("column " + spec.name + ": vocabulary not built before encode");
        }
        cat_cols.push_back(c);
        out.cat_specs.emplace_back(spec.name, spec.cardinality());
        break;
      case ColumnKind::continuous: {
        cont_cols.push_back(c);
        ContStat s;
        s.name = spec.name;
        out.cont_stats.push_back(s);
        break;
      }
      case ColumnKind::target:
        target_col = c;
        break;
      case ColumnKind::identifier:
        break;
    }
  }
  if (target_col < 0) throw ValidationError("no target column in table");

  const Index n = table.row_count();
  out.cat.resize(n, static_cast<Index>(cat_cols.size()));
  out.cont.resize(n, static_cast<Index>(cont_cols.size()));
  out.target.resize(n);

  // per-column value -> index maps
  std::vector<std::unordered_map<std::string, Index>> lookups;
  lookups.reserve(cat_cols.size());
  for (std::size_t j = 0; j < cat_cols.size(); ++j) {
    const ColumnSpec& spec = schema.at(out.cat_specs[j].first);
    std::unordered_map<std::string, Index> m;
    for (std::size_t i = 0; i < spec.vocabulary.size(); ++i) {
      m[spec.vocabulary[i]] = static_cast<Index>(i);
    }
    lookups.push_back(std::move(m));
  }

  for (Index r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < cat_cols.size(); ++j) {
      const ColumnSpec& spec = schema.at(out.cat_specs[j].first);
      const std::string& cell = table.cell(r, cat_cols[j]);
      const std::string& key = (cell == spec.missing_marker) ? std::string("nan") : cell;
      auto it = lookups[j].find(key);
      if (it == lookups[j].end()) it = lookups[j].find("nan");
      out.cat(r, static_cast<Index>(j)) = static_cast<std::int32_t>(it->second);
    }
    for (std::size_t j = 0; j < cont_cols.size(); ++j) {
      const std::string& cell = table.cell(r, cont_cols[j]);
      double v = 0;
      if (!parse_double(cell, v)) {
        throw ValidationError("column " + out.cont_stats[j].name + ": non-numeric value \"" +
                              cell + "\" at row " + std::to_string(r + 1));
      }
      out.cont(r, static_cast<Index>(j)) = v;
    }
    out.target[r] = encode_target(table.cell(r, target_col));
  }

  // medians over the encoded values (equal to the imputation medians: filling
  // with the median does not move it)
  for (std::size_t j = 0; j < cont_cols.size(); ++j) {
    if (n == 0) break;
    std::vector<double> col(static_cast<std::size_t>(n));
    for (Index r = 0; r < n; ++r) col[static_cast<std::size_t>(r)] = out.cont(r, static_cast<Index>(j));
    out.cont_stats[j].median = median_of(std::move(col));
  }
  return out;
}

EncodedMatrix transform_and_standardize(const EncodedMatrix& matrix, const DatasetSchema& schema,
                                        std::span<const Index> fit_rows) {
  EncodedMatrix out = matrix;
  const Index n = matrix.rows();

  std::vector<Index> all;
  if (fit_rows.empty()) {
    all.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    fit_rows = all;
  }
  if (fit_rows.empty()) throw ValidationError("standardize: no fit rows");

  for (Index j = 0; j < out.n_cont(); ++j) {
    ContStat& stat = out.cont_stats[static_cast<std::size_t>(j)];
    const ColumnSpec* spec = schema.find(stat.name);
    const bool want_log1p = spec && spec->has(Directive::log1p);

    // median in original units, over the fit rows
    {
      std::vector<double> vals;
      vals.reserve(fit_rows.size());
      for (Index r : fit_rows) vals.push_back(out.cont(r, j));
      stat.median = median_of(std::move(vals));
    }

    if (want_log1p && !stat.log1p_applied) {
      for (Index r = 0; r < n; ++r) {
        const double v = out.cont(r, j);
        if (v < 0) {
          throw ValidationError("column " + stat.name + ": negative value " + std::to_string(v) +
                                " in a log1p column");
        }
        out.cont(r, j) = std::log1p(v);
      }
      stat.log1p_applied = true;
      stat.median = std::log1p(stat.median);
    }

    double mean = 0;
    for (Index r : fit_rows) mean += out.cont(r, j);
    mean /= static_cast<double>(fit_rows.size());
    double var = 0;
    for (Index r : fit_rows) {
      const double d = out.cont(r, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(fit_rows.size());
    double std_dev = std::sqrt(var);
    if (std_dev <= 1e-12) std_dev = 1.0;  // constant column maps to zeros

    for (Index r = 0; r < n; ++r) {
      out.cont(r, j) = (out.cont(r, j) - mean) / std_dev;
    }
    stat.mean = mean;
    stat.std = std_dev;
    stat.standardized = true;
  }
  return out;
}

EncodedMatrix apply_cont_stats(const EncodedMatrix& matrix, const std::vector<ContStat>& stats) {
  if (stats.size() != matrix.cont_stats.size()) {
    throw ValidationError("layout mismatch: expected " + std::to_string(stats.size()) +
                          " continuous columns, got " + std::to_string(matrix.cont_stats.size()));
  }
  EncodedMatrix out = matrix;
  for (Index j = 0; j < out.n_cont(); ++j) {
    const ContStat& s = stats[static_cast<std::size_t>(j)];
    if (s.name != out.cont_stats[static_cast<std::size_t>(j)].name) {
      throw ValidationError("layout mismatch: continuous column \"" +
                            out.cont_stats[static_cast<std::size_t>(j)].name + "\" where \"" +
                            s.name + "\" was expected");
    }
    for (Index r = 0; r < out.rows(); ++r) {
      double v = out.cont(r, j);
      if (s.log1p_applied) {
        if (v < 0) {
          throw ValidationError("column " + s.name + ": negative value in a log1p column");
        }
        v = std::log1p(v);
      }
      out.cont(r, j) = (v - s.mean) / s.std;
    }
    out.cont_stats[static_cast<std::size_t>(j)] = s;
  }
  return out;
}

FoldPlan plan_folds(const VecXi& labels, int k, std::uint64_t seed) {
  const Index n = labels.size();
  if (k < 2) throw ValidationError("k must be at least 2");
  if (static_cast<Index>(k) > n) {
    throw ValidationError("k (" + std::to_string(k) + ") exceeds row count (" +
                          std::to_string(n) + ")");
  }
  std::vector<Index> pos, neg;
  for (Index i = 0; i < n; ++i) {
    (labels[i] == 1 ? pos : neg).push_back(i);
  }
  Rng rng(seed);
  Rng pos_rng = rng.stream("folds-pos");
  Rng neg_rng = rng.stream("folds-neg");
  pos_rng.shuffle(pos);
  neg_rng.shuffle(neg);

  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(static_cast<std::size_t>(n), 0);
  Index counter = 0;
  for (Index i : pos) plan.assignments[static_cast<std::size_t>(i)] = static_cast<int>(counter++ % k);
  for (Index i : neg) plan.assignments[static_cast<std::size_t>(i)] = static_cast<int>(counter++ % k);
  return plan;
}

std::string PreprocessReport::to_text() const {
  std::ostringstream os;
  os << "preprocessing report\n";
  os << "====================\n";
  os << "rows in:                      " << rows_in << "\n";
  os << "after first-encounter dedup:  " << rows_after_dedup << "  (dropped "
     << (rows_in - rows_after_dedup) << ")\n";
  os << "after 250.xx diabetes filter: " << rows_after_diabetes_filter << "  (dropped "
     << (rows_after_dedup - rows_after_diabetes_filter) << ")\n";
  os << "after death/hospice filter:   " << rows_after_death_filter << "  (dropped "
     << (rows_after_diabetes_filter - rows_after_death_filter) << ")\n";
  os << "\ndropped columns:\n";
  if (dropped_columns.empty()) os << "  (none)\n";
  for (const auto& d : dropped_columns) {
    os << "  " << d.name << "  [" << d.reason << "]\n";
  }
  os << "\nimputation medians:\n";
  if (imputation_medians.empty()) os << "  (no continuous column had missing values)\n";
  for (const auto& [name, med] : imputation_medians) {
    os << "  " << name << " = " << med << "\n";
  }
  os << "\nencoded columns: " << n_categorical << " categorical, " << n_continuous
     << " continuous\n";
  os << "categorical cardinalities:\n";
  for (const auto& [name, card] : cat_cardinalities) {
    os << "  " << name << ": " << card << "\n";
  }
  return os.str();
}

PipelineResult run_pipeline(const RawTable& table, const DatasetSchema& schema) {
  PipelineResult result;
  PreprocessReport& rep = result.report;
  rep.rows_in = table.row_count();
  if (table.row_count() == 0) throw ValidationError("no rows");

  RawTable t = keep_first_encounter(table, schema);
  rep.rows_after_dedup = t.row_count();

  FilterCounts fc;
  t = filter_diabetes_and_alive(t, schema, &fc);
  rep.rows_after_diabetes_filter = rep.rows_after_dedup - fc.dropped_not_diabetes;
  rep.rows_after_death_filter = t.row_count();

  t = relabel_levels(t, schema);
  t = synthesize_features(t, schema);
  t = select_features(t, schema, &rep.dropped_columns);

  // record which continuous columns actually had holes before imputing
  for (Index c = 0; c < t.column_count(); ++c) {
    const ColumnSpec* spec = schema.find(t.header[static_cast<std::size_t>(c)]);
    if (!spec || spec->kind != ColumnKind::continuous) continue;
    std::vector<double> present;
    bool any_missing = false;
    for (Index r = 0; r < t.row_count(); ++r) {
      const std::string& cell = t.cell(r, c);
      if (cell == spec->missing_marker) {
        any_missing = true;
      } else {
        double v = 0;
        if (parse_double(cell, v)) present.push_back(v);
      }
    }
    if (any_missing && !present.empty()) {
      rep.imputation_medians.emplace_back(spec->name, median_of(std::move(present)));
    }
  }

  t = impute_missing(t, schema);
  result.schema = build_vocabularies(t, schema);
  result.matrix = encode(t, result.schema);

  rep.n_categorical = result.matrix.n_cat();
  rep.n_continuous = result.matrix.n_cont();
  rep.cat_cardinalities = result.matrix.cat_specs;
  return result;
}

}  // namespace embpred
