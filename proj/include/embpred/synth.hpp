#pragma once

#include <cstdint>

#include "embpred/schema.hpp"
#include "embpred/table.hpp"

namespace embpred {

// Deterministic desk-scale generator for schema-shaped encounter data. The
// target takes value "<30" with probability minority_fraction; minority rows
// receive stochastically higher inpatient counts and more medication-level
// changes, so a learnable boundary exists and the expected importance ranking
// is known. Every row carries a 250.xx diagnosis; a small fraction of rows
// duplicate an earlier patient or carry a death disposition code to give the
// pruning steps something to do.
RawTable generate_synthetic(const DatasetSchema& schema, Index n_rows, double minority_fraction,
                            std::uint64_t seed);

}  // namespace embpred
