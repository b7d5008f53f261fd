#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "embpred/preprocess.hpp"
#include "embpred/rng.hpp"
#include "embpred/types.hpp"

namespace testutil {

using embpred::EncodedMatrix;
using embpred::Index;
using embpred::MatXd;
using embpred::MatXi;
using embpred::Rng;
using embpred::VecXd;
using embpred::VecXi;

// Pair-counting oracle: P(score_pos > score_neg) + 0.5 P(equal).
inline double brute_force_auroc(const VecXd& scores, const VecXi& labels) {
  double concordant = 0;
  long pairs = 0;
  for (Index i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (Index j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) concordant += 1.0;
      else if (scores[i] == scores[j]) concordant += 0.5;
    }
  }
  return concordant / static_cast<double>(pairs);
}

// Random mixed-type matrix with both classes present.
inline EncodedMatrix make_mixed_matrix(Rng& rng, Index rows, Index n_cont, Index n_cat,
                                       Index cardinality, double positive_fraction) {
  EncodedMatrix m;
  m.cont.resize(rows, n_cont);
  m.cat.resize(rows, n_cat);
  m.target.resize(rows);
  for (Index j = 0; j < n_cat; ++j) {
    m.cat_specs.emplace_back("cat" + std::to_string(j), cardinality);
  }
  for (Index j = 0; j < n_cont; ++j) {
    embpred::ContStat s;
    s.name = "cont" + std::to_string(j);
    m.cont_stats.push_back(s);
  }
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < n_cont; ++j) m.cont(i, j) = rng.normal();
    for (Index j = 0; j < n_cat; ++j) {
      m.cat(i, j) = static_cast<std::int32_t>(rng.uniform_int(cardinality));
    }
    m.target[i] = rng.bernoulli(positive_fraction) ? 1 : 0;
  }
  // guarantee both classes
  m.target[0] = 1;
  m.target[rows - 1] = 0;
  return m;
}

class TempDir {
 public:
  TempDir() {
    std::string templ = (std::filesystem::temp_directory_path() / "embpred-test-XXXXXX").string();
    std::vector<char> buf(templ.begin(), templ.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (std::filesystem::path(path_) / name).string();
  }

 private:
  std::string path_;
};

}  // namespace testutil
