#pragma once

#include <string>

#include "embpred/preprocess.hpp"
#include "embpred/schema.hpp"

namespace embpred {

struct DatasetBundle {
  EncodedMatrix matrix;
  DatasetSchema schema;  // snapshot with built vocabularies
};

// Binary encoded-dataset file: magic "EPD1", format version, JSON header
// (schema snapshot, column layout, statistics), little-endian payload
// (int32 categorical indices, float32 continuous values, int32 targets),
// trailing CRC-32.
void save_dataset(const DatasetBundle& bundle, const std::string& path);
DatasetBundle load_dataset(const std::string& path);

std::string dataset_to_bytes(const DatasetBundle& bundle);
DatasetBundle dataset_from_bytes(const std::string& bytes);

}  // namespace embpred
