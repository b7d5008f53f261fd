#include "embpred/smote.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "embpred/error.hpp"
#include "embpred/rng.hpp"

namespace embpred {

const char* to_string(CategoricalStrategy s) {
  return s == CategoricalStrategy::majority_vote ? "majority" : "copy";
}

const char* to_string(SmoteScope s) {
  return s == SmoteScope::train_only ? "train-only" : "global";
}

namespace {

std::vector<Index> minority_rows(const EncodedMatrix& m, int* minority_label = nullptr) {
  Index pos = 0, neg = 0;
  for (Index i = 0; i < m.rows(); ++i) {
    (m.target[i] == 1 ? pos : neg)++;
  }
  if (pos == 0 || neg == 0) {
    throw ValidationError("oversample: input contains a single class");
  }
  const int label = pos <= neg ? 1 : 0;
  if (minority_label) *minority_label = label;
  std::vector<Index> rows;
  for (Index i = 0; i < m.rows(); ++i) {
    if (m.target[i] == label) rows.push_back(i);
  }
  return rows;
}

double population_std(const EncodedMatrix& m, Index col, const std::vector<Index>& rows) {
  double mean = 0;
  for (Index r : rows) mean += m.cont(r, col);
  mean /= static_cast<double>(rows.size());
  double var = 0;
  for (Index r : rows) {
    const double d = m.cont(r, col) - mean;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(rows.size()));
}

}  // namespace

double categorical_penalty(const EncodedMatrix& matrix) {
  if (matrix.n_cont() == 0) return 1.0;
  const std::vector<Index> minority = minority_rows(matrix);
  std::vector<double> stds;
  stds.reserve(static_cast<std::size_t>(matrix.n_cont()));
  for (Index j = 0; j < matrix.n_cont(); ++j) {
    stds.push_back(population_std(matrix, j, minority));
  }
  std::sort(stds.begin(), stds.end());
  const std::size_t n = stds.size();
  const double med = (n % 2 == 1) ? stds[n / 2] : 0.5 * (stds[n / 2 - 1] + stds[n / 2]);
  return med > 0 ? med : 1.0;
}

double mixed_squared_distance(const EncodedMatrix& matrix, Index a, Index b, double penalty) {
  double d2 = 0;
  for (Index j = 0; j < matrix.n_cont(); ++j) {
    const double d = matrix.cont(a, j) - matrix.cont(b, j);
    d2 += d * d;
  }
  for (Index j = 0; j < matrix.n_cat(); ++j) {
    if (matrix.cat(a, j) != matrix.cat(b, j)) d2 += penalty * penalty;
  }
  return d2;
}

namespace {

std::vector<Index> knn_of(const EncodedMatrix& matrix, Index row,
                          const std::vector<Index>& candidates, int k, double penalty) {
  std::vector<std::pair<double, Index>> dist;
  dist.reserve(candidates.size());
  for (Index c : candidates) {
    if (c == row) continue;
    dist.emplace_back(mixed_squared_distance(matrix, row, c, penalty), c);
  }
  std::sort(dist.begin(), dist.end());  // ties resolve to the lower row index
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k && i < static_cast<int>(dist.size()); ++i) {
    out.push_back(dist[static_cast<std::size_t>(i)].second);
  }
  return out;
}

}  // namespace

std::vector<Index> nearest_minority_neighbors(const EncodedMatrix& matrix, Index row, int k) {
  int minority_label = 0;
  const std::vector<Index> minority = minority_rows(matrix, &minority_label);
  if (matrix.target[row] != minority_label) {
    throw ValidationError("nearest_minority_neighbors: row " + std::to_string(row) +
                          " is not in the minority class");
  }
  if (k >= static_cast<int>(minority.size())) {
    throw ValidationError("k (" + std::to_string(k) + ") must be below the minority count (" +
                          std::to_string(minority.size()) + ")");
  }
  return knn_of(matrix, row, minority, k, categorical_penalty(matrix));
}

SmoteResult oversample(const EncodedMatrix& matrix, const SmoteConfig& config) {
  if (config.k_neighbors < 1) throw ValidationError("k_neighbors must be at least 1");
  int minority_label = 0;
  const std::vector<Index> minority = minority_rows(matrix, &minority_label);
  const Index minority_count = static_cast<Index>(minority.size());
  const Index majority_count = matrix.rows() - minority_count;

  if (minority_count <= config.k_neighbors) {
    throw ValidationError("minority count (" + std::to_string(minority_count) +
                          ") must exceed k_neighbors (" + std::to_string(config.k_neighbors) +
                          "); use a smaller --smote-k");
  }

  const Index deficit = majority_count - minority_count;
  const double penalty = categorical_penalty(matrix);

  // neighborhood per minority row, computed once
  std::vector<std::vector<Index>> neighborhoods(minority.size());
  for (std::size_t i = 0; i < minority.size(); ++i) {
    neighborhoods[i] = knn_of(matrix, minority[i], minority, config.k_neighbors, penalty);
  }

  SmoteResult result;
  EncodedMatrix& out = result.matrix;
  out.cat_specs = matrix.cat_specs;
  out.cont_stats = matrix.cont_stats;
  out.cat.resize(matrix.rows() + deficit, matrix.cat.cols());
  out.cont.resize(matrix.rows() + deficit, matrix.cont.cols());
  out.target.resize(matrix.rows() + deficit);
  if (matrix.cat.cols() > 0) out.cat.topRows(matrix.rows()) = matrix.cat;
  if (matrix.cont.cols() > 0) out.cont.topRows(matrix.rows()) = matrix.cont;
  out.target.head(matrix.rows()) = matrix.target;

  Rng root(config.seed);
  for (Index j = 0; j < deficit; ++j) {
    Rng rng = root.stream("smote-row", static_cast<std::uint64_t>(j));
    const std::size_t si = static_cast<std::size_t>(rng.uniform_int(minority_count));
    const Index seed_row = minority[si];
    const std::vector<Index>& nn = neighborhoods[si];
    const Index neighbor = nn[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(nn.size())))];
    const double lambda = rng.uniform();

    const Index dst = matrix.rows() + j;
    for (Index c = 0; c < matrix.cont.cols(); ++c) {
      const double s = matrix.cont(seed_row, c);
      const double z = matrix.cont(neighbor, c);
      out.cont(dst, c) = s + lambda * (z - s);
    }
    for (Index c = 0; c < matrix.cat.cols(); ++c) {
      if (config.categorical_strategy == CategoricalStrategy::copy_seed) {
        out.cat(dst, c) = matrix.cat(seed_row, c);
        continue;
      }
      // majority vote over seed + its k neighbors; ties fall back to the seed
      std::map<std::int32_t, int> votes;
      votes[matrix.cat(seed_row, c)]++;
      for (Index nb : nn) votes[matrix.cat(nb, c)]++;
      int best_count = 0;
      std::int32_t best_value = matrix.cat(seed_row, c);
      bool tie = false;
      for (const auto& [value, count] : votes) {
        if (count > best_count) {
          best_count = count;
          best_value = value;
          tie = false;
        } else if (count == best_count) {
          tie = true;
        }
      }
      out.cat(dst, c) = tie ? matrix.cat(seed_row, c) : best_value;
    }
    out.target[dst] = minority_label;
    result.synthesized.push_back({seed_row, neighbor, lambda});
  }
  return result;
}

}  // namespace embpred
