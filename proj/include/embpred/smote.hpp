#pragma once

#include <cstdint>
#include <vector>

#include "embpred/preprocess.hpp"
#include "embpred/types.hpp"

namespace embpred {

enum class CategoricalStrategy { majority_vote, copy_seed };
enum class SmoteScope { train_only, global };

const char* to_string(CategoricalStrategy s);
const char* to_string(SmoteScope s);

struct SmoteConfig {
  int k_neighbors = 5;
  std::uint64_t seed = 0;
  CategoricalStrategy categorical_strategy = CategoricalStrategy::majority_vote;
};

// Provenance of one synthetic row (indices into the input matrix).
struct SynthRecord {
  Index seed_row = 0;
  Index neighbor_row = 0;
  double lambda = 0.0;
};

struct SmoteResult {
  EncodedMatrix matrix;                  // originals first, in order, then synthetic rows
  std::vector<SynthRecord> synthesized;  // one per appended row
};

// Fixed per-mismatch categorical distance penalty: the median of the
// continuous-column standard deviations over the minority rows (1 when there
// are no continuous columns or they are all constant).
double categorical_penalty(const EncodedMatrix& matrix);

// Squared distance used by the neighbor search: squared Euclidean over the
// continuous block plus penalty^2 per mismatched categorical.
double mixed_squared_distance(const EncodedMatrix& matrix, Index a, Index b, double penalty);

// The k minority rows nearest to `row` (itself excluded), ties broken by the
// lower row index. `row` must belong to the minority class.
std::vector<Index> nearest_minority_neighbors(const EncodedMatrix& matrix, Index row, int k);

// Appends synthetic minority rows until the class counts are exactly equal.
// Continuous features of a synthetic row interpolate between a random minority
// seed and one of its k nearest minority neighbors; categorical features
// follow the configured strategy. The draw sequence of synthetic row j depends
// only on (config.seed, j).
SmoteResult oversample(const EncodedMatrix& matrix, const SmoteConfig& config);

}  // namespace embpred
