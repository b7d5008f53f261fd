#include "embpred/model_io.hpp"

#include <json.hpp>

#include "embpred/binio.hpp"
#include "embpred/error.hpp"
#include "embpred/version.hpp"

namespace embpred {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'E', 'P', 'M', '1'};

json config_to_json(const ModelConfig& c) {
  return json{{"hidden_sizes", c.hidden_sizes},
              {"emb_dropout", c.emb_dropout},
              {"hidden_dropout", c.hidden_dropout},
              {"bn_momentum", c.bn_momentum},
              {"bn_eps", c.bn_eps},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"lr", c.lr},
              {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.hidden_sizes = j.at("hidden_sizes").get<std::vector<Index>>();
  c.emb_dropout = j.at("emb_dropout").get<double>();
  c.hidden_dropout = j.at("hidden_dropout").get<double>();
  c.bn_momentum = j.at("bn_momentum").get<double>();
  c.bn_eps = j.at("bn_eps").get<double>();
  c.epochs = j.at("epochs").get<Index>();
  c.batch_size = j.at("batch_size").get<Index>();
  c.lr = j.at("lr").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

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

// Tensors in a fixed traversal order; running statistics are saved alongside
// the learnable parameters.
template <typename Fn>
void visit_tensors(EmbNet<float>& net, Fn&& fn) {
  int i = 0;
  for (auto& e : net.embeddings()) {
    fn("embedding_" + std::to_string(i++), e.table().value);
  }
  if (net.n_cont() > 0) {
    fn("bn_cont.gamma", net.bn_cont().gamma().value);
    fn("bn_cont.beta", net.bn_cont().beta().value);
    fn("bn_cont.running_mean", net.bn_cont().running_mean());
    fn("bn_cont.running_var", net.bn_cont().running_var());
  }
  int b = 0;
  for (auto& block : net.blocks()) {
    const std::string prefix = "block" + std::to_string(b++) + ".";
    fn(prefix + "weight", block.linear.weight().value);
    fn(prefix + "bias", block.linear.bias().value);
    fn(prefix + "bn.gamma", block.bn.gamma().value);
    fn(prefix + "bn.beta", block.bn.beta().value);
    fn(prefix + "bn.running_mean", block.bn.running_mean());
    fn(prefix + "bn.running_var", block.bn.running_var());
  }
  fn("head.weight", net.head().weight().value);
  fn("head.bias", net.head().bias().value);
}

}  // namespace

std::string model_to_bytes(const ModelBundle& bundle) {
  json header;
  header["format"] = "epm";
  header["version"] = kModelFormatVersion;
  header["tool_version"] = kVersion;
  header["schema"] = json::parse(schema_to_json_text(bundle.schema, -1));
  header["config"] = config_to_json(bundle.config);
  json cats = json::array();
  for (const auto& [name, card] : bundle.cat_specs) {
    cats.push_back({{"name", name}, {"cardinality", card}});
  }
  header["cat_specs"] = cats;
  json conts = json::array();
  for (const auto& s : bundle.cont_stats) conts.push_back(cont_stat_to_json(s));
  header["cont_stats"] = conts;

  json manifest = json::array();
  auto& net = const_cast<ModelBundle&>(bundle).net;
  visit_tensors(net, [&](const std::string& name, MatXf& t) {
    manifest.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  });
  header["tensors"] = manifest;

  const std::string header_text = header.dump();
  ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(static_cast<std::uint32_t>(kModelFormatVersion));
  w.u64(header_text.size());
  w.str(header_text);
  visit_tensors(net, [&](const std::string&, MatXf& t) {
    w.array(t.data(), static_cast<std::size_t>(t.size()));
  });

  std::string bytes = w.take();
  const std::uint32_t crc = crc32(bytes.data(), bytes.size());
  bytes.append(reinterpret_cast<const char*>(&crc), 4);
  return bytes;
}

ModelBundle model_from_bytes(const std::string& bytes) {
  if (bytes.size() < 16) throw IoError("truncated model file");
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  if (crc32(bytes.data(), bytes.size() - 4) != stored_crc) {
    throw IoError("checksum mismatch: model file corrupted or truncated");
  }

  ByteReader r(bytes);
  if (r.str(4) != std::string(kMagic, 4)) throw IoError("not a model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != static_cast<std::uint32_t>(kModelFormatVersion)) {
    throw IoError("model format version " + std::to_string(version) + " unsupported");
  }
  json header;
  try {
    header = json::parse(r.str(r.u64()));
  } catch (const json::exception& e) {
    throw IoError(std::string("model header parse failure: ") + e.what());
  }

  ModelBundle bundle;
  bundle.schema = schema_from_json_text(header.at("schema").dump());
  bundle.config = config_from_json(header.at("config"));
  for (const auto& jc : header.at("cat_specs")) {
    bundle.cat_specs.emplace_back(jc.at("name").get<std::string>(),
                                  jc.at("cardinality").get<Index>());
  }
  for (const auto& js : header.at("cont_stats")) {
    bundle.cont_stats.push_back(cont_stat_from_json(js));
  }

  bundle.net = EmbNet<float>(bundle.cat_specs, static_cast<Index>(bundle.cont_stats.size()),
                             bundle.config);
  std::size_t ti = 0;
  const json& manifest = header.at("tensors");
  visit_tensors(bundle.net, [&](const std::string& name, MatXf& t) {
    if (ti >= manifest.size()) throw IoError("model manifest shorter than network layout");
    const json& jt = manifest[ti++];
    if (jt.at("name").get<std::string>() != name || jt.at("rows").get<Index>() != t.rows() ||
        jt.at("cols").get<Index>() != t.cols()) {
      throw ValidationError("layout mismatch: tensor " + name + " does not match the saved manifest");
    }
    r.array(t.data(), static_cast<std::size_t>(t.size()));
  });
  if (ti != manifest.size()) throw IoError("model manifest longer than network layout");
  bundle.net.set_mode(nn::Mode::eval);
  return bundle;
}

void save_model(const ModelBundle& bundle, const std::string& path) {
  write_file_bytes(path, model_to_bytes(bundle));
}

ModelBundle load_model(const std::string& path) {
  return model_from_bytes(read_file_bytes(path));
}

EncodedMatrix align_to_model(const EncodedMatrix& data, const DatasetSchema& data_schema,
                             const ModelBundle& model) {
  if (data.cat_specs.size() != model.cat_specs.size() ||
      data.cont_stats.size() != model.cont_stats.size()) {
    throw ValidationError(
        "layout mismatch: dataset has " + std::to_string(data.cat_specs.size()) + " categorical / " +
        std::to_string(data.cont_stats.size()) + " continuous columns; model expects " +
        std::to_string(model.cat_specs.size()) + " / " + std::to_string(model.cont_stats.size()));
  }
  for (std::size_t j = 0; j < data.cat_specs.size(); ++j) {
    if (data.cat_specs[j].first != model.cat_specs[j].first) {
      throw ValidationError("layout mismatch: categorical column \"" + data.cat_specs[j].first +
                            "\" where \"" + model.cat_specs[j].first + "\" was expected");
    }
  }

  EncodedMatrix out = data;
  // translate indices: data vocabulary string -> model vocabulary index
  for (std::size_t j = 0; j < data.cat_specs.size(); ++j) {
    const ColumnSpec& from = data_schema.at(data.cat_specs[j].first);
    const ColumnSpec& to = model.schema.at(model.cat_specs[j].first);
    std::vector<std::int32_t> remap(from.vocabulary.size());
    for (std::size_t i = 0; i < from.vocabulary.size(); ++i) {
      remap[i] = static_cast<std::int32_t>(to.vocab_index(from.vocabulary[i]));
    }
    for (Index r = 0; r < out.rows(); ++r) {
      out.cat(r, static_cast<Index>(j)) = remap[static_cast<std::size_t>(out.cat(r, static_cast<Index>(j)))];
    }
    out.cat_specs[j].second = to.cardinality();
  }
  return apply_cont_stats(out, model.cont_stats);
}

}  // namespace embpred
