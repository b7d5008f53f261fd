#include "embpred/schema.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "embpred/error.hpp"
#include "embpred/table.hpp"

namespace embpred {

using nlohmann::json;

const char* to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::identifier: return "identifier";
    case ColumnKind::target: return "target";
  }
  return "?";
}

const char* to_string(Directive d) {
  switch (d) {
    case Directive::log1p: return "log1p";
    case Directive::drop: return "drop";
    case Directive::medication_level: return "medication_level";
    case Directive::diagnosis_code: return "diagnosis_code";
    case Directive::engineered: return "engineered";
  }
  return "?";
}

ColumnKind column_kind_from_string(std::string_view s) {
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "continuous") return ColumnKind::continuous;
  if (s == "identifier") return ColumnKind::identifier;
  if (s == "target") return ColumnKind::target;
  throw ValidationError("unknown column kind: " + std::string(s));
}

Directive directive_from_string(std::string_view s) {
  if (s == "log1p") return Directive::log1p;
  if (s == "drop") return Directive::drop;
  if (s == "medication_level") return Directive::medication_level;
  if (s == "diagnosis_code") return Directive::diagnosis_code;
  if (s == "engineered") return Directive::engineered;
  throw ValidationError("unknown directive: " + std::string(s));
}

Index ColumnSpec::vocab_index(const std::string& value) const {
  const std::string& key = (value == missing_marker) ? std::string("nan") : value;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (vocabulary[i] == key) return static_cast<Index>(i);
  }
  // Unseen category: fall back to "nan", which every built vocabulary carries.
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (vocabulary[i] == "nan") return static_cast<Index>(i);
  }
  throw ValidationError("column " + name + ": vocabulary has no \"nan\" fallback");
}

const ColumnSpec* DatasetSchema::find(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const ColumnSpec& DatasetSchema::at(const std::string& name) const {
  const ColumnSpec* c = find(name);
  if (!c) throw ValidationError("schema has no column named \"" + name + "\"");
  return *c;
}

void DatasetSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) throw ValidationError("schema column with empty name");
    if (!seen.insert(c.name).second) throw ValidationError("duplicate column: " + c.name);
    if (c.kind == ColumnKind::continuous && !c.vocabulary.empty()) {
      throw ValidationError("continuous column " + c.name + " must have an empty vocabulary");
    }
    if (c.kind == ColumnKind::categorical && !c.vocabulary.empty()) {
      std::set<std::string> vocab_seen;
      Index nan_count = 0;
      for (const auto& v : c.vocabulary) {
        if (!vocab_seen.insert(v).second) {
          throw ValidationError("column " + c.name + ": duplicate vocabulary entry \"" + v + "\"");
        }
        if (v == "nan") ++nan_count;
      }
      if (nan_count != 1) {
        throw ValidationError("column " + c.name + ": vocabulary must contain \"nan\" exactly once");
      }
    }
  }

  int target_count = 0;
  for (const auto& c : columns) {
    if (c.kind == ColumnKind::target) ++target_count;
  }
  if (target_count != 1 || target_column.empty()) throw ValidationError("no target column");
  if (at(target_column).kind != ColumnKind::target) {
    throw ValidationError("target column " + target_column + " is not declared with kind target");
  }
  if (patient_id_column.empty() || !has_column(patient_id_column)) {
    throw ValidationError("dangling reference: patient id column \"" + patient_id_column + "\"");
  }
  if (encounter_id_column.empty() || !has_column(encounter_id_column)) {
    throw ValidationError("dangling reference: encounter id column \"" + encounter_id_column + "\"");
  }
  if (diagnosis_columns.size() != 3) {
    throw ValidationError("schema must name exactly 3 diagnosis columns");
  }
  for (const auto& d : diagnosis_columns) {
    if (!has_column(d)) throw ValidationError("dangling reference: diagnosis column \"" + d + "\"");
  }
}

namespace {

json schema_to_json(const DatasetSchema& s) {
  json cols = json::array();
  for (const auto& c : s.columns) {
    json jc;
    jc["name"] = c.name;
    jc["kind"] = to_string(c.kind);
    if (!c.directives.empty()) {
      json dirs = json::array();
      for (const auto& d : c.directives) dirs.push_back(to_string(d));
      jc["directives"] = dirs;
    }
    if (c.missing_marker != "?") jc["missing_marker"] = c.missing_marker;
    if (!c.vocabulary.empty()) jc["vocabulary"] = c.vocabulary;
    cols.push_back(jc);
  }
  json j;
  j["columns"] = cols;
  j["patient_id"] = s.patient_id_column;
  j["encounter_id"] = s.encounter_id_column;
  j["target"] = s.target_column;
  j["diagnosis_columns"] = s.diagnosis_columns;
  j["discharge_column"] = s.discharge_column;
  j["death_disposition_codes"] = std::vector<std::string>(s.death_disposition_codes.begin(),
                                                          s.death_disposition_codes.end());
  return j;
}

DatasetSchema schema_from_json(const json& j) {
  DatasetSchema s;
  if (!j.contains("columns") || !j["columns"].is_array()) {
    throw ValidationError("schema: missing columns[]");
  }
  for (const auto& jc : j["columns"]) {
    ColumnSpec c;
    c.name = jc.at("name").get<std::string>();
    c.kind = column_kind_from_string(jc.at("kind").get<std::string>());
    if (jc.contains("missing_marker")) c.missing_marker = jc["missing_marker"].get<std::string>();
    if (jc.contains("directives")) {
      for (const auto& d : jc["directives"]) c.directives.insert(directive_from_string(d.get<std::string>()));
    }
    if (jc.contains("vocabulary")) c.vocabulary = jc["vocabulary"].get<std::vector<std::string>>();
    s.columns.push_back(std::move(c));
  }
  s.patient_id_column = j.value("patient_id", std::string());
  s.encounter_id_column = j.value("encounter_id", std::string());
  s.target_column = j.value("target", std::string());
  if (j.contains("diagnosis_columns")) {
    s.diagnosis_columns = j["diagnosis_columns"].get<std::vector<std::string>>();
  }
  s.discharge_column = j.value("discharge_column", std::string("discharge_disposition_id"));
  if (j.contains("death_disposition_codes")) {
    for (const auto& code : j["death_disposition_codes"]) {
      s.death_disposition_codes.insert(code.get<std::string>());
    }
  }
  s.validate();
  return s;
}

}  // namespace

DatasetSchema schema_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("schema parse failure: ") + e.what());
  }
  return schema_from_json(j);
}

std::string schema_to_json_text(const DatasetSchema& schema, int indent) {
  return schema_to_json(schema).dump(indent);
}

DatasetSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return schema_from_json_text(text);
}

void save_schema(const DatasetSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << schema_to_json_text(schema) << "\n";
}

DatasetSchema build_vocabularies(const RawTable& table, const DatasetSchema& schema) {
  for (const auto& name : table.header) {
    if (!schema.has_column(name)) {
      throw ValidationError("unknown column in table: " + name);
    }
  }
  DatasetSchema out = schema;
  for (auto& c : out.columns) {
    if (c.kind != ColumnKind::categorical) continue;
    const Index col = table.column_index(c.name);
    if (col < 0) continue;
    std::set<std::string> distinct;
    for (Index r = 0; r < table.row_count(); ++r) {
      const std::string& v = table.cell(r, col);
      if (v == c.missing_marker || v == "nan") continue;
      distinct.insert(v);
    }
    c.vocabulary.assign(distinct.begin(), distinct.end());  // lexicographic
    c.vocabulary.push_back("nan");
  }
  out.validate();
  return out;
}

}  // namespace embpred
