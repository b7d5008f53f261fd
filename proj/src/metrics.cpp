#include "embpred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "embpred/error.hpp"
#include "embpred/rng.hpp"

namespace embpred {

namespace {

void check_both_classes(const VecXi& labels) {
  bool pos = false, neg = false;
  for (Index i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? pos : neg) = true;
  }
  if (!pos || !neg) throw ValidationError("labels contain a single class");
}

std::pair<double, double> mean_and_population_std(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

double auroc(const VecXd& scores, const VecXi& labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("auroc: score/label length mismatch");
  }
  check_both_classes(labels);
  const Index n = scores.size();

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return scores[a] < scores[b]; });

  // average ranks over tie groups
  std::vector<double> rank(static_cast<std::size_t>(n));
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && scores[order[static_cast<std::size_t>(j + 1)]] ==
                            scores[order[static_cast<std::size_t>(i)]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>((i + 1) + (j + 1));
    for (Index t = i; t <= j; ++t) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = avg;
    i = j + 1;
  }

  double pos_rank_sum = 0;
  Index pos = 0;
  for (Index r = 0; r < n; ++r) {
    if (labels[r] == 1) {
      pos_rank_sum += rank[static_cast<std::size_t>(r)];
      ++pos;
    }
  }
  const Index neg = n - pos;
  const double u = pos_rank_sum - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1);
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<RocPoint> roc_curve(const VecXd& scores, const VecXi& labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("roc_curve: score/label length mismatch");
  }
  check_both_classes(labels);
  const Index n = scores.size();

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return scores[a] > scores[b]; });

  double total_pos = 0, total_neg = 0;
  for (Index r = 0; r < n; ++r) (labels[r] == 1 ? total_pos : total_neg) += 1;

  std::vector<RocPoint> points;
  points.push_back({0.0, 0.0, scores[order[0]] + 1.0});

  double tp = 0, fp = 0;
  Index i = 0;
  while (i < n) {
    const double threshold = scores[order[static_cast<std::size_t>(i)]];
    while (i < n && scores[order[static_cast<std::size_t>(i)]] == threshold) {
      (labels[order[static_cast<std::size_t>(i)]] == 1 ? tp : fp) += 1;
      ++i;
    }
    points.push_back({fp / total_neg, tp / total_pos, threshold});
  }
  return points;
}

double trapezoid_area(const std::vector<RocPoint>& points) {
  double area = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * 0.5 * (points[i].tpr + points[i - 1].tpr);
  }
  return area;
}

std::pair<Confusion, double> confusion_and_accuracy(const VecXd& scores, const VecXi& labels,
                                                    double threshold) {
  Confusion c;
  for (Index i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++c.tp;
    else if (predicted && !actual) ++c.fp;
    else if (!predicted && actual) ++c.fn;
    else ++c.tn;
  }
  const double accuracy =
      c.total() == 0 ? 0.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return {c, accuracy};
}

EvalReport evaluate_scores(const VecXd& scores, const VecXi& labels, double threshold) {
  EvalReport report;
  report.threshold = threshold;
  auto [confusion, accuracy] = confusion_and_accuracy(scores, labels, threshold);
  report.confusion = confusion;
  report.accuracy = accuracy;
  report.auroc = auroc(scores, labels);
  report.roc_points = roc_curve(scores, labels);
  return report;
}

namespace {

struct FoldOutcome {
  EvalReport report;
  VecXd val_scores;
  VecXi val_labels;
  ModelBundle bundle;
};

FoldOutcome run_fold(const EncodedMatrix& data, const DatasetSchema& schema,
                     const ModelConfig& config, const SmoteConfig& smote, const FoldPlan& plan,
                     const CvOptions& options, int fold, bool keep_model) {
  const std::vector<Index> train_idx = plan.complement_rows(fold);
  const std::vector<Index> val_idx = plan.fold_rows(fold);

  EncodedMatrix standardized = transform_and_standardize(data, schema, train_idx);
  EncodedMatrix train_mat = take_rows(standardized, train_idx);
  EncodedMatrix val_mat = take_rows(standardized, val_idx);

  auto single_class = [](const VecXi& t) {
    bool pos = false, neg = false;
    for (Index i = 0; i < t.size(); ++i) (t[i] == 1 ? pos : neg) = true;
    return !(pos && neg);
  };
  if (single_class(train_mat.target) || single_class(val_mat.target)) {
    throw ValidationError("fold " + std::to_string(fold) + " is single-class");
  }

  if (options.smote_enabled) {
    SmoteConfig fold_smote = smote;
    fold_smote.seed = mix_seed(smote.seed, static_cast<std::uint64_t>(fold) + 101);
    train_mat = oversample(train_mat, fold_smote).matrix;
  }

  ModelConfig fold_config = config;
  fold_config.seed = mix_seed(config.seed, static_cast<std::uint64_t>(fold) + 1);
  EmbNet<float> net(train_mat.cat_specs, train_mat.n_cont(), fold_config);
  train(net, train_mat, fold_config);

  FoldOutcome out;
  out.val_scores = predict_scores(net, val_mat);
  out.val_labels = val_mat.target;
  out.report = evaluate_scores(out.val_scores, out.val_labels, options.threshold);
  if (keep_model) {
    out.bundle.schema = schema;
    out.bundle.config = fold_config;
    out.bundle.cat_specs = train_mat.cat_specs;
    out.bundle.cont_stats = train_mat.cont_stats;
    out.bundle.net = std::move(net);
  }
  return out;
}

}  // namespace

CvSummary cross_validate(const EncodedMatrix& data, const DatasetSchema& schema,
                         const ModelConfig& config, const SmoteConfig& smote,
                         const FoldPlan& plan, const CvOptions& options,
                         std::vector<ModelBundle>* fold_models) {
  const bool global_smote = options.smote_enabled && options.smote_scope == SmoteScope::global;
  if (!global_smote && static_cast<Index>(plan.assignments.size()) != data.rows()) {
    throw ValidationError("fold plan does not cover the dataset rows");
  }

  const EncodedMatrix* working = &data;
  EncodedMatrix global_matrix;
  FoldPlan working_plan = plan;

  if (global_smote) {
    // leaky protocol, kept for comparability: balance first, split after
    EncodedMatrix standardized = transform_and_standardize(data, schema, {});
    global_matrix = oversample(standardized, smote).matrix;
    // synthetic rows are already standardized; per-fold refits are harmless
    working = &global_matrix;
    working_plan = plan_folds(global_matrix.target, plan.k,
                              mix_seed(config.seed, hash_name("global-folds")));
  }

  CvOptions fold_options = options;
  const int k = working_plan.k;
  std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(k));
  std::vector<std::string> errors(static_cast<std::size_t>(k));

  const bool keep = fold_models != nullptr;
  auto worker = [&](int first, int stride) {
    for (int f = first; f < k; f += stride) {
      try {
        outcomes[static_cast<std::size_t>(f)] =
            run_fold(*working, schema, config, smote, working_plan, fold_options, f, keep);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(f)] = e.what();
      }
    }
  };

  const int threads = std::max(1, std::min(options.threads, k));
  if (threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
    for (auto& t : pool) t.join();
  }
  for (int f = 0; f < k; ++f) {
    if (!errors[static_cast<std::size_t>(f)].empty()) {
      throw ValidationError(errors[static_cast<std::size_t>(f)]);
    }
  }

  CvSummary summary;
  summary.k = k;
  std::vector<double> accs, rocs;
  Index pooled_n = 0;
  for (const auto& o : outcomes) pooled_n += o.val_scores.size();
  VecXd pooled_scores(pooled_n);
  VecXi pooled_labels(pooled_n);
  Index at = 0;
  for (auto& o : outcomes) {
    summary.folds.push_back(o.report);
    accs.push_back(o.report.accuracy);
    rocs.push_back(o.report.auroc);
    pooled_scores.segment(at, o.val_scores.size()) = o.val_scores;
    pooled_labels.segment(at, o.val_labels.size()) = o.val_labels;
    at += o.val_scores.size();
    if (fold_models) fold_models->push_back(std::move(o.bundle));
  }
  std::tie(summary.accuracy_mean, summary.accuracy_std) = mean_and_population_std(accs);
  std::tie(summary.auroc_mean, summary.auroc_std) = mean_and_population_std(rocs);
  summary.pooled = evaluate_scores(pooled_scores, pooled_labels, options.threshold);
  return summary;
}

ImportanceReport permutation_importance(EmbNet<float>& model, const EncodedMatrix& data,
                                        int repeats, std::uint64_t seed) {
  if (repeats < 1) throw ValidationError("repeats must be at least 1");
  ImportanceReport report;
  report.repeats = repeats;
  report.baseline_auroc = auroc(predict_scores(model, data), data.target);

  const Index n = data.rows();
  Rng root(seed);

  auto shuffled_indices = [&](std::uint64_t feature, int rep) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    Rng rng = root.stream("permutation", feature * 1000003ull + static_cast<std::uint64_t>(rep));
    rng.shuffle(idx);
    return idx;
  };

  std::uint64_t feature_counter = 0;
  auto measure = [&](const std::string& name, bool categorical, Index col) {
    std::vector<double> drops;
    for (int rep = 0; rep < repeats; ++rep) {
      EncodedMatrix permuted = data;
      const std::vector<Index> idx = shuffled_indices(feature_counter, rep);
      for (Index r = 0; r < n; ++r) {
        if (categorical) {
          permuted.cat(r, col) = data.cat(idx[static_cast<std::size_t>(r)], col);
        } else {
          permuted.cont(r, col) = data.cont(idx[static_cast<std::size_t>(r)], col);
        }
      }
      drops.push_back(report.baseline_auroc - auroc(predict_scores(model, permuted), data.target));
    }
    auto [mean, std_dev] = mean_and_population_std(drops);
    report.entries.push_back({name, report.baseline_auroc, mean, std_dev, repeats});
    ++feature_counter;
  };

  for (Index j = 0; j < data.n_cat(); ++j) {
    measure(data.cat_specs[static_cast<std::size_t>(j)].first, true, j);
  }
  for (Index j = 0; j < data.n_cont(); ++j) {
    measure(data.cont_stats[static_cast<std::size_t>(j)].name, false, j);
  }

  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const ImportanceEntry& a, const ImportanceEntry& b) {
                     return a.mean_drop > b.mean_drop;
                   });
  return report;
}

}  // namespace embpred
