#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "embpred/types.hpp"

namespace embpred {

struct DatasetSchema;

// String-valued table, loaded verbatim from CSV. Immutable by convention:
// pipeline steps take a const table and return a new one.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Index row_count() const { return static_cast<Index>(rows.size()); }
  Index column_count() const { return static_cast<Index>(header.size()); }

  // -1 when absent.
  Index column_index(const std::string& name) const;
  bool has_column(const std::string& name) const { return column_index(name) >= 0; }

  const std::string& cell(Index row, Index col) const { return rows[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)]; }
};

// RFC-4180: comma separator, double-quote quoting with "" escapes, first row
// is the header. Validates cell counts and that every non-engineered schema
// column is present.
RawTable read_csv(const std::string& path, const DatasetSchema& schema);
RawTable parse_csv(std::istream& in, const DatasetSchema& schema);

void write_csv(const RawTable& table, const std::string& path);
std::string to_csv_string(const RawTable& table);

}  // namespace embpred
