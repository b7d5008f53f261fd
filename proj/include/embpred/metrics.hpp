#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "embpred/model.hpp"
#include "embpred/model_io.hpp"
#include "embpred/preprocess.hpp"
#include "embpred/smote.hpp"
#include "embpred/types.hpp"

namespace embpred {

struct Confusion {
  std::int64_t tn = 0, fp = 0, fn = 0, tp = 0;
  std::int64_t total() const { return tn + fp + fn + tp; }
};

struct RocPoint {
  double fpr = 0, tpr = 0, threshold = 0;
};

struct EvalReport {
  double accuracy = 0;
  double auroc = 0;
  double threshold = 0.5;
  Confusion confusion;
  std::vector<RocPoint> roc_points;
};

// Probability that a random positive outscores a random negative, ties
// counted one half (Mann-Whitney rank-sum formulation).
double auroc(const VecXd& scores, const VecXi& labels);

// One point per distinct score, thresholds descending, from (0,0) to (1,1).
// The trapezoidal area under the polyline equals auroc().
std::vector<RocPoint> roc_curve(const VecXd& scores, const VecXi& labels);

double trapezoid_area(const std::vector<RocPoint>& points);

// Predict positive iff score >= threshold.
std::pair<Confusion, double> confusion_and_accuracy(const VecXd& scores, const VecXi& labels,
                                                    double threshold = 0.5);

EvalReport evaluate_scores(const VecXd& scores, const VecXi& labels, double threshold = 0.5);

struct CvSummary {
  int k = 0;
  std::vector<EvalReport> folds;
  double accuracy_mean = 0, accuracy_std = 0;
  double auroc_mean = 0, auroc_std = 0;
  EvalReport pooled;  // all validation scores concatenated
};

struct CvOptions {
  bool smote_enabled = true;
  SmoteScope smote_scope = SmoteScope::train_only;
  int threads = 1;
  double threshold = 0.5;
};

// Per fold: fit standardization on the training rows, oversample the training
// rows (train-only scope), train a fresh model with a fold-derived seed, and
// evaluate on the untouched validation rows. Global scope reproduces the
// leaky protocol: oversample the whole standardized matrix first and re-plan
// folds over the enlarged data.
CvSummary cross_validate(const EncodedMatrix& data, const DatasetSchema& schema,
                         const ModelConfig& config, const SmoteConfig& smote,
                         const FoldPlan& plan, const CvOptions& options = {},
                         std::vector<ModelBundle>* fold_models = nullptr);

struct ImportanceEntry {
  std::string name;
  double baseline_auroc = 0;
  double mean_drop = 0;
  double std_drop = 0;
  int repeats = 0;
};

struct ImportanceReport {
  double baseline_auroc = 0;
  int repeats = 0;
  std::vector<ImportanceEntry> entries;  // sorted by mean_drop, descending
};

// Permutation importance: shuffle one column across rows (seeded), remeasure
// auroc, record baseline minus permuted, averaged over `repeats`. `data` must
// already be in model space (aligned + standardized).
ImportanceReport permutation_importance(EmbNet<float>& model, const EncodedMatrix& data,
                                        int repeats, std::uint64_t seed);

}  // namespace embpred
