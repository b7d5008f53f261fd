#include "embpred/dataset_io.hpp"

#include <json.hpp>

#include "embpred/binio.hpp"
#include "embpred/error.hpp"
#include "embpred/version.hpp"

namespace embpred {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'E', 'P', 'D', '1'};

json cont_stat_to_json(const ContStat& s) {
  return json{{"name", s.name},     {"median", s.median},
              {"mean", s.mean},     {"std", s.std},
              {"log1p", s.log1p_applied}, {"standardized", s.standardized}};
}

ContStat cont_stat_from_json(const json& j) {
  ContStat s;
  s.name = j.at("name").get<std::string>();
  s.median = j.at("median").get<double>();
  s.mean = j.at("mean").get<double>();
  s.std = j.at("std").get<double>();
  s.log1p_applied = j.at("log1p").get<bool>();
  s.standardized = j.at("standardized").get<bool>();
  return s;
}

}  // namespace

std::string dataset_to_bytes(const DatasetBundle& bundle) {
  const EncodedMatrix& m = bundle.matrix;
  json header;
  header["format"] = "epd";
  header["version"] = kDatasetFormatVersion;
  header["tool_version"] = kVersion;
  header["schema"] = json::parse(schema_to_json_text(bundle.schema, -1));
  header["n_rows"] = m.rows();
  json cats = json::array();
  for (const auto& [name, card] : m.cat_specs) cats.push_back({{"name", name}, {"cardinality", card}});
  header["cat_specs"] = cats;
  json conts = json::array();
  for (const auto& s : m.cont_stats) conts.push_back(cont_stat_to_json(s));
  header["cont_stats"] = conts;

  const std::string header_text = header.dump();
  ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(static_cast<std::uint32_t>(kDatasetFormatVersion));
  w.u64(header_text.size());
  w.str(header_text);

  w.array(m.cat.data(), static_cast<std::size_t>(m.cat.size()));
  std::vector<float> cont32(static_cast<std::size_t>(m.cont.size()));
  for (Index r = 0; r < m.cont.rows(); ++r) {
    for (Index c = 0; c < m.cont.cols(); ++c) {
      cont32[static_cast<std::size_t>(r * m.cont.cols() + c)] = static_cast<float>(m.cont(r, c));
    }
  }
  w.array(cont32.data(), cont32.size());
  w.array(m.target.data(), static_cast<std::size_t>(m.target.size()));

  std::string bytes = w.take();
  const std::uint32_t crc = crc32(bytes.data(), bytes.size());
  bytes.append(reinterpret_cast<const char*>(&crc), 4);
  return bytes;
}

DatasetBundle dataset_from_bytes(const std::string& bytes) {
  if (bytes.size() < 16) throw IoError("truncated dataset file");
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  if (crc32(bytes.data(), bytes.size() - 4) != stored_crc) {
    throw IoError("checksum mismatch: dataset file corrupted or truncated");
  }

  ByteReader r(bytes);
  if (r.str(4) != std::string(kMagic, 4)) throw IoError("not a dataset file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != static_cast<std::uint32_t>(kDatasetFormatVersion)) {
    throw IoError("dataset format version " + std::to_string(version) + " unsupported");
  }
  const std::uint64_t hlen = r.u64();
  json header;
  try {
    header = json::parse(r.str(hlen));
  } catch (const json::exception& e) {
    throw IoError(std::string("dataset header parse failure: ") + e.what());
  }

  DatasetBundle bundle;
  bundle.schema = schema_from_json_text(header.at("schema").dump());
  EncodedMatrix& m = bundle.matrix;
  const Index n = header.at("n_rows").get<Index>();
  for (const auto& jc : header.at("cat_specs")) {
    m.cat_specs.emplace_back(jc.at("name").get<std::string>(), jc.at("cardinality").get<Index>());
  }
  for (const auto& js : header.at("cont_stats")) m.cont_stats.push_back(cont_stat_from_json(js));

  m.cat.resize(n, m.n_cat());
  m.cont.resize(n, m.n_cont());
  m.target.resize(n);
  r.array(m.cat.data(), static_cast<std::size_t>(m.cat.size()));
  std::vector<float> cont32(static_cast<std::size_t>(m.cont.size()));
  r.array(cont32.data(), cont32.size());
  for (Index i = 0; i < m.cont.rows(); ++i) {
    for (Index c = 0; c < m.cont.cols(); ++c) {
      m.cont(i, c) = static_cast<double>(cont32[static_cast<std::size_t>(i * m.cont.cols() + c)]);
    }
  }
  r.array(m.target.data(), static_cast<std::size_t>(m.target.size()));
  return bundle;
}

void save_dataset(const DatasetBundle& bundle, const std::string& path) {
  write_file_bytes(path, dataset_to_bytes(bundle));
}

DatasetBundle load_dataset(const std::string& path) {
  return dataset_from_bytes(read_file_bytes(path));
}

}  // namespace embpred
