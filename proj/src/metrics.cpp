#include "slu/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace slu {

namespace {

struct ClassCounts {
  int positives = 0;
  int negatives = 0;
};

ClassCounts count_classes(const std::vector<ScoredExample> &examples) {
  ClassCounts c;
  for (const auto &ex : examples) {
    if (ex.gold == 1) {
      ++c.positives;
    } else {
      ++c.negatives;
    }
  }
  if (c.positives == 0 || c.negatives == 0) {
    throw MetricsError("metrics require both gold classes to be present");
  }
  return c;
}

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::pair<double, double> binary_rates(const std::vector<ScoredExample> &examples) {
  const ClassCounts c = count_classes(examples);
  int tp = 0;
  int fp = 0;
  for (const auto &ex : examples) {
    const bool predicted_positive = ex.score >= 1.0;
    if (!predicted_positive) continue;
    if (ex.gold == 1) {
      ++tp;
    } else {
      ++fp;
    }
  }
  return {static_cast<double>(tp) / c.positives,
          static_cast<double>(fp) / c.negatives};
}

RocCurve roc_curve(const std::vector<ScoredExample> &examples) {
  const ClassCounts c = count_classes(examples);

  std::set<double, std::greater<double>> thresholds;
  for (const auto &ex : examples) thresholds.insert(ex.score);

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (double th : thresholds) {
    int tp = 0;
    int fp = 0;
    for (const auto &ex : examples) {
      if (ex.score < th) continue;
      if (ex.gold == 1) {
        ++tp;
      } else {
        ++fp;
      }
    }
    curve.points.push_back({th, static_cast<double>(fp) / c.negatives,
                            static_cast<double>(tp) / c.positives});
  }
  return curve;
}

double eer(const RocCurve &curve) {
  if (curve.points.empty()) throw MetricsError("eer: empty curve");
  // diff = fpr - fnr goes from -1 at (0,0) to +1 at (1,1).
  for (const auto &p : curve.points) {
    if (p.fpr - (1.0 - p.tpr) == 0.0) return p.fpr;
  }
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const auto &a = curve.points[i];
    const auto &b = curve.points[i + 1];
    const double da = a.fpr - (1.0 - a.tpr);
    const double db = b.fpr - (1.0 - b.tpr);
    if (da < 0.0 && db > 0.0) {
      const double lambda = (1.0 - a.tpr - a.fpr) / ((b.fpr - a.fpr) + (b.tpr - a.tpr));
      return a.fpr + lambda * (b.fpr - a.fpr);
    }
  }
  throw MetricsError("eer: curve has no fpr = 1 - tpr crossing");
}

double fpr_at_tpr(const RocCurve &curve, double target_tpr, FprAtTprMode mode) {
  if (!(target_tpr > 0.0 && target_tpr <= 1.0)) {
    throw MetricsError("fpr_at_tpr: target must be in (0, 1]");
  }
  if (curve.points.empty()) throw MetricsError("fpr_at_tpr: empty curve");

  if (mode == FprAtTprMode::kOperatingPoint) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto &p : curve.points) {
      if (p.tpr >= target_tpr) best = std::min(best, p.fpr);
    }
    if (std::isinf(best)) throw MetricsError("fpr_at_tpr: target unreachable");
    return best;
  }

  // Interpolated: fpr/tpr are non-decreasing, so the first point at or above
  // the target gives the minimum; interpolate if the target falls strictly
  // between two points.
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto &p = curve.points[i];
    if (p.tpr < target_tpr) continue;
    if (p.tpr == target_tpr || i == 0) return p.fpr;
    const auto &prev = curve.points[i - 1];
    const double lambda = (target_tpr - prev.tpr) / (p.tpr - prev.tpr);
    return prev.fpr + lambda * (p.fpr - prev.fpr);
  }
  throw MetricsError("fpr_at_tpr: target unreachable");
}

double auc(const RocCurve &curve) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const auto &a = curve.points[i];
    const auto &b = curve.points[i + 1];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return area;
}

KeywordReport keyword_report(const std::vector<ParsedPrediction> &preds,
                             const std::map<std::string, std::string> &golds) {
  std::vector<std::string> labels(kCommandKeywords.begin(), kCommandKeywords.end());
  labels.push_back(kOovLabel);
  auto known = [&labels](const std::string &l) {
    return std::find(labels.begin(), labels.end(), l) != labels.end();
  };

  std::map<std::string, int> tp;
  std::map<std::string, int> fp;
  std::map<std::string, int> fn;
  int correct = 0;
  int descriptive = 0;
  for (const auto &pred : preds) {
    const auto it = golds.find(pred.utterance_id);
    if (it == golds.end()) {
      throw MetricsError("keyword_report: no gold label for utterance " +
                         pred.utterance_id);
    }
    const std::string &gold = it->second;
    if (!known(gold)) {
      throw MetricsError("keyword_report: gold label outside the keyword set: " + gold);
    }
    if (!known(pred.keyword)) {
      throw MetricsError("keyword_report: prediction outside the keyword set: " +
                         pred.keyword);
    }
    if (pred.was_descriptive) ++descriptive;
    if (pred.keyword == gold) {
      ++correct;
      ++tp[gold];
    } else {
      ++fp[pred.keyword];
      ++fn[gold];
    }
  }

  KeywordReport report;
  for (const auto &label : labels) {
    KeywordStats stats;
    const int label_tp = tp[label];
    const int predicted = label_tp + fp[label];
    const int actual = label_tp + fn[label];
    if (predicted > 0) stats.precision = static_cast<double>(label_tp) / predicted;
    if (actual > 0) stats.recall = static_cast<double>(label_tp) / actual;
    report.per_keyword.emplace_back(label, stats);
  }
  if (!preds.empty()) {
    report.total_accuracy = static_cast<double>(correct) / preds.size();
    report.descriptive_fraction = static_cast<double>(descriptive) / preds.size();
  }
  return report;
}

std::string ks_baseline(const NBestList &nbest) {
  if (nbest.hypotheses.empty()) {
    throw MetricsError("ks_baseline: empty n-best list");
  }
  const auto &words = nbest.hypotheses.front().words;
  if (words.size() == 1 && is_command_keyword(words.front())) {
    return words.front();
  }
  return kOovLabel;
}

std::string roc_to_csv(const RocCurve &curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto &p : curve.points) {
    out += format_real(p.threshold);
    out += ',';
    out += format_real(p.fpr);
    out += ',';
    out += format_real(p.tpr);
    out += '\n';
  }
  return out;
}

std::string report_to_json(const EvalReport &report) {
  nlohmann::ordered_json doc;
  if (report.tpr) doc["tpr"] = *report.tpr;
  if (report.fpr) doc["fpr"] = *report.fpr;
  if (report.eer) doc["eer"] = *report.eer;
  if (report.fpr_at_tpr95) doc["fpr_at_tpr95"] = *report.fpr_at_tpr95;
  if (report.auc) doc["auc"] = *report.auc;
  if (!report.per_keyword.empty()) {
    nlohmann::ordered_json per;
    for (const auto &[label, stats] : report.per_keyword) {
      nlohmann::ordered_json entry;
      entry["precision"] =
          stats.precision ? nlohmann::ordered_json(*stats.precision)
                          : nlohmann::ordered_json(nullptr);
      entry["recall"] = stats.recall ? nlohmann::ordered_json(*stats.recall)
                                     : nlohmann::ordered_json(nullptr);
      per[label] = std::move(entry);
    }
    doc["per_keyword"] = std::move(per);
  }
  if (report.total_accuracy) doc["total_accuracy"] = *report.total_accuracy;
  doc["descriptive_fraction"] = report.descriptive_fraction;
  return doc.dump(2) + "\n";
}

}  // namespace slu
