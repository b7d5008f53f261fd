#include "embpred/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace embpred {

using nlohmann::json;

namespace {

json confusion_to_json_obj(const Confusion& c) {
  return json{{"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}, {"tp", c.tp}};
}

json eval_report_to_json_obj(const EvalReport& r) {
  json roc = json::array();
  for (const auto& p : r.roc_points) {
    roc.push_back({p.fpr, p.tpr, p.threshold});
  }
  return json{{"accuracy", r.accuracy},
              {"auroc", r.auroc},
              {"threshold", r.threshold},
              {"confusion", confusion_to_json_obj(r.confusion)},
              {"roc_points", roc}};
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

std::string eval_report_to_json(const EvalReport& report, int indent) {
  return eval_report_to_json_obj(report).dump(indent);
}

std::string cv_summary_to_json(const CvSummary& summary, int indent) {
  json folds = json::array();
  for (const auto& f : summary.folds) folds.push_back(eval_report_to_json_obj(f));
  json j{{"k", summary.k},
         {"accuracy_mean", summary.accuracy_mean},
         {"accuracy_std", summary.accuracy_std},
         {"auroc_mean", summary.auroc_mean},
         {"auroc_std", summary.auroc_std},
         {"folds", folds},
         {"pooled", eval_report_to_json_obj(summary.pooled)}};
  return j.dump(indent);
}

std::string importance_to_json(const ImportanceReport& report, int indent) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"feature", e.name},
                       {"baseline_auroc", e.baseline_auroc},
                       {"mean_drop", e.mean_drop},
                       {"std_drop", e.std_drop},
                       {"repeats", e.repeats}});
  }
  json j{{"baseline_auroc", report.baseline_auroc},
         {"repeats", report.repeats},
         {"features", entries}};
  return j.dump(indent);
}

std::string roc_to_csv(const std::vector<RocPoint>& points) {
  std::ostringstream os;
  os << "threshold,fpr,tpr\n";
  for (const auto& p : points) {
    os << p.threshold << "," << p.fpr << "," << p.tpr << "\n";
  }
  return os.str();
}

std::string confusion_to_csv(const Confusion& c) {
  std::ostringstream os;
  os << ",predicted_no,predicted_yes\n";
  os << "actual_no," << c.tn << "," << c.fp << "\n";
  os << "actual_yes," << c.fn << "," << c.tp << "\n";
  return os.str();
}

std::string importance_to_csv(const ImportanceReport& report) {
  std::ostringstream os;
  os << "feature,baseline_auroc,mean_drop,std_drop,repeats\n";
  for (const auto& e : report.entries) {
    os << e.name << "," << e.baseline_auroc << "," << e.mean_drop << "," << e.std_drop << ","
       << e.repeats << "\n";
  }
  return os.str();
}

std::string loss_curve_to_csv(const std::vector<double>& epoch_loss) {
  std::ostringstream os;
  os << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
    os << (i + 1) << "," << epoch_loss[i] << "\n";
  }
  return os.str();
}

std::string roc_to_svg(const std::vector<RocPoint>& points, double auroc_value) {
  constexpr double W = 480, H = 480, M = 56;
  const double plot_w = W - 2 * M, plot_h = H - 2 * M;
  auto px = [&](double fpr) { return M + fpr * plot_w; };
  auto py = [&](double tpr) { return H - M - tpr * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int g = 0; g <= 4; ++g) {
    const double t = g / 4.0;
    os << "<line x1=\"" << px(t) << "\" y1=\"" << py(0) << "\" x2=\"" << px(t) << "\" y2=\""
       << py(1) << "\" stroke=\"#dddddd\"/>\n";
    os << "<line x1=\"" << px(0) << "\" y1=\"" << py(t) << "\" x2=\"" << px(1) << "\" y2=\""
       << py(t) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << px(t) << "\" y=\"" << H - M + 18
       << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">" << fmt(t, 2)
       << "</text>\n";
    os << "<text x=\"" << M - 8 << "\" y=\"" << py(t) + 4
       << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" << fmt(t, 2)
       << "</text>\n";
  }
  os << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
     << "\" stroke=\"#999999\" stroke-dasharray=\"5,4\"/>\n";

  os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (const auto& p : points) {
    os << fmt(px(p.fpr), 2) << "," << fmt(py(p.tpr), 2) << " ";
  }
  os << "\"/>\n";

  os << "<text x=\"" << W / 2 << "\" y=\"24\" font-size=\"15\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\">ROC curve (AUROC = "
     << fmt(auroc_value) << ")</text>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
     << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">false positive "
        "rate</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2
     << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 "
        "16 "
     << H / 2 << ")\">true positive rate</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string confusion_to_svg(const Confusion& c) {
  constexpr double W = 420, H = 380, M = 90;
  const double cell = 120;
  const std::int64_t values[2][2] = {{c.tn, c.fp}, {c.fn, c.tp}};
  const std::int64_t max_v = std::max<std::int64_t>(1, std::max({c.tn, c.fp, c.fn, c.tp}));
  const char* row_names[2] = {"actual no", "actual yes"};
  const char* col_names[2] = {"predicted no", "predicted yes"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"28\" font-size=\"15\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\">Confusion matrix</text>\n";
  for (int r = 0; r < 2; ++r) {
    for (int col = 0; col < 2; ++col) {
      const double x = M + col * cell;
      const double y = 60 + r * cell;
      const double intensity = static_cast<double>(values[r][col]) / static_cast<double>(max_v);
      const int blue = 255 - static_cast<int>(intensity * 160);
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
         << "\" fill=\"rgb(" << blue - 40 << "," << blue << ",255)\" stroke=\"#444444\"/>\n";
      os << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 6
         << "\" font-size=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\">"
         << values[r][col] << "</text>\n";
    }
    os << "<text x=\"" << M - 10 << "\" y=\"" << 60 + r * cell + cell / 2 + 4
       << "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">" << row_names[r]
       << "</text>\n";
  }
  for (int col = 0; col < 2; ++col) {
    os << "<text x=\"" << M + col * cell + cell / 2 << "\" y=\"" << 60 + 2 * cell + 24
       << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">" << col_names[col]
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string importance_to_svg(const ImportanceReport& report) {
  const std::size_t n = report.entries.size();
  const double row_h = 22, left = 190, top = 50;
  const double W = 640, H = top + row_h * static_cast<double>(n) + 30;
  double max_drop = 1e-12;
  for (const auto& e : report.entries) max_drop = std::max(max_drop, std::abs(e.mean_drop));

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"26\" font-size=\"15\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\">Permutation importance (AUROC drop)</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = report.entries[i];
    const double y = top + row_h * static_cast<double>(i);
    const double w = std::max(0.0, e.mean_drop) / max_drop * (W - left - 80);
    os << "<text x=\"" << left - 8 << "\" y=\"" << y + 14
       << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" << e.name
       << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << y + 3 << "\" width=\"" << fmt(w, 2)
       << "\" height=\"" << row_h - 8 << "\" fill=\"#1f77b4\"/>\n";
    os << "<text x=\"" << left + w + 6 << "\" y=\"" << y + 14
       << "\" font-size=\"10\" font-family=\"sans-serif\">" << fmt(e.mean_drop) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace embpred
