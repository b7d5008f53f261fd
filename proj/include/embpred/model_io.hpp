#pragma once

#include <string>
#include <utility>
#include <vector>

#include "embpred/model.hpp"
#include "embpred/preprocess.hpp"
#include "embpred/schema.hpp"

namespace embpred {

// Trained model plus everything inference needs: the schema snapshot the
// model was trained against, the column layout, and the fitted continuous
// statistics.
struct ModelBundle {
  DatasetSchema schema;
  ModelConfig config;
  std::vector<std::pair<std::string, Index>> cat_specs;
  std::vector<ContStat> cont_stats;
  EmbNet<float> net;
};

// Binary model file: magic "EPM1", format version, JSON header (schema,
// config, layout, tensor manifest), float32 parameter blobs in manifest
// order, trailing CRC-32. A load of a save reproduces every parameter and
// running statistic bit-exactly.
void save_model(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model(const std::string& path);

std::string model_to_bytes(const ModelBundle& bundle);
ModelBundle model_from_bytes(const std::string& bytes);

// Re-encodes a dataset produced against another vocabulary into the model's
// vocabulary and applies the model's continuous statistics. Column names,
// kinds and order must match; throws ValidationError otherwise.
EncodedMatrix align_to_model(const EncodedMatrix& data, const DatasetSchema& data_schema,
                             const ModelBundle& model);

}  // namespace embpred
