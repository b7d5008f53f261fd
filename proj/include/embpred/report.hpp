#pragma once

#include <string>

#include "embpred/metrics.hpp"

namespace embpred {

// JSON documents (stable key order, deterministic float formatting).
std::string eval_report_to_json(const EvalReport& report, int indent = 2);
std::string cv_summary_to_json(const CvSummary& summary, int indent = 2);
std::string importance_to_json(const ImportanceReport& report, int indent = 2);

// CSV companions.
std::string roc_to_csv(const std::vector<RocPoint>& points);
std::string confusion_to_csv(const Confusion& confusion);
std::string importance_to_csv(const ImportanceReport& report);
std::string loss_curve_to_csv(const std::vector<double>& epoch_loss);

// Self-contained static figures.
std::string roc_to_svg(const std::vector<RocPoint>& points, double auroc_value);
std::string confusion_to_svg(const Confusion& confusion);
std::string importance_to_svg(const ImportanceReport& report);

}  // namespace embpred
