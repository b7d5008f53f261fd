#include "embpred/table.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "embpred/error.hpp"
#include "embpred/schema.hpp"

namespace embpred {

Index RawTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<Index>(i);
  }
  return -1;
}

namespace {

// One RFC-4180 record; handles quoted cells with embedded commas, quotes and
// newlines. Returns false on EOF with nothing read.
bool read_record(std::istream& in, std::vector<std::string>& out) {
  out.clear();
  std::string cell;
  bool in_quotes = false;
  bool any = false;
  int ch = 0;
  while ((ch = in.get()) != EOF) {
    any = true;
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          cell.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n') {
      break;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      break;
    } else {
      cell.push_back(c);
    }
  }
  if (!any) return false;
  out.push_back(std::move(cell));
  return true;
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

void append_cell(std::string& out, const std::string& s) {
  if (!needs_quoting(s)) {
    out += s;
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

RawTable parse_csv(std::istream& in, const DatasetSchema& schema) {
  RawTable table;
  if (!read_record(in, table.header)) throw ValidationError("empty CSV: no header row");

  std::set<std::string> seen;
  for (const auto& h : table.header) {
    if (!seen.insert(h).second) throw ValidationError("duplicate column in header: " + h);
  }
  for (const auto& col : schema.columns) {
    if (col.has(Directive::engineered)) continue;  // synthesized later, not expected in files
    if (std::find(table.header.begin(), table.header.end(), col.name) == table.header.end()) {
      throw ValidationError("missing column " + col.name);
    }
  }

  std::vector<std::string> record;
  Index row_number = 0;
  while (read_record(in, record)) {
    ++row_number;
    if (record.size() == 1 && record[0].empty()) continue;  // blank trailing line
    if (record.size() != table.header.size()) {
      throw ValidationError("row " + std::to_string(row_number) + ": expected " +
                            std::to_string(table.header.size()) + " cells, got " +
                            std::to_string(record.size()));
    }
    table.rows.push_back(record);
  }
  return table;
}

RawTable read_csv(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open CSV file: " + path);
  return parse_csv(in, schema);
}

std::string to_csv_string(const RawTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out.push_back(',');
    append_cell(out, table.header[i]);
  }
  out.push_back('\n');
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      append_cell(out, row[i]);
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const RawTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << to_csv_string(table);
}

}  // namespace embpred
