#ifndef SLU_METRICS_HPP
#define SLU_METRICS_HPP

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "slu/lattice.hpp"
#include "slu/parsing.hpp"

namespace slu {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One evaluated utterance: a decision score in [0,1] (exactly 0/1 for
/// binary systems) plus the gold binary label.
struct ScoredExample {
  std::string utterance_id;
  double score = 0.0;
  int gold = 0;
};

struct RocPoint {
  double threshold = 0.0;  // +inf for the leading (0,0) point
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Operating points sorted by descending threshold; fpr/tpr non-decreasing;
/// first point (0,0), last point (1,1).
struct RocCurve {
  std::vector<RocPoint> points;
};

struct KeywordStats {
  std::optional<double> precision;  // absent when the label was never predicted
  std::optional<double> recall;     // absent when the label never occurs in gold
};

/// Per-keyword precision/recall (canonical keyword order, then OOV) plus
/// exact-match accuracy and the fraction of free-form answers.
struct KeywordReport {
  std::vector<std::pair<std::string, KeywordStats>> per_keyword;
  double total_accuracy = 0.0;
  double descriptive_fraction = 0.0;
};

/// Union of the mode-specific metric sets; absent optionals are omitted from
/// the serialized report.
struct EvalReport {
  std::optional<double> tpr;
  std::optional<double> fpr;
  std::optional<double> eer;
  std::optional<double> fpr_at_tpr95;
  std::optional<double> auc;
  std::vector<std::pair<std::string, KeywordStats>> per_keyword;
  std::optional<double> total_accuracy;
  double descriptive_fraction = 0.0;
};

/// (tpr, fpr) for hard 0/1 scores: predicted positive iff score >= 1.
/// Throws MetricsError unless both gold classes are present.
std::pair<double, double> binary_rates(const std::vector<ScoredExample> &examples);

/// Threshold sweep over the distinct scores (descending), decision rule
/// score >= threshold, with a leading (+inf, 0, 0) point. Throws
/// MetricsError unless both gold classes are present.
RocCurve roc_curve(const std::vector<ScoredExample> &examples);

/// Equal error rate: the fpr where fpr == 1 - tpr on the piecewise-linear
/// curve (exact point preferred, else linear interpolation at the sign
/// change of fpr - (1 - tpr)).
double eer(const RocCurve &curve);

enum class FprAtTprMode {
  kInterpolated,    // read fpr off the piecewise-linear curve at tpr == target
  kOperatingPoint,  // minimum fpr among actual curve points with tpr >= target
};

/// False-positive rate at the given true-positive-rate target (default the
/// TPR=95 operating condition). Throws MetricsError unless 0 < target <= 1.
double fpr_at_tpr(const RocCurve &curve, double target_tpr = 0.95,
                  FprAtTprMode mode = FprAtTprMode::kInterpolated);

/// Trapezoidal area under the curve.
double auc(const RocCurve &curve);

/// Confusion-table summary over the closed 11-label set. `golds` maps
/// utterance_id to its gold label. Throws MetricsError on an id without a
/// gold or a label outside the set.
KeywordReport keyword_report(const std::vector<ParsedPrediction> &preds,
                             const std::map<std::string, std::string> &golds);

/// The trivial keyword-spotting baseline: the 1-best transcript must be
/// exactly one command keyword, anything else is OOV.
std::string ks_baseline(const NBestList &nbest);

/// CSV with header `threshold,fpr,tpr`; infinite threshold printed as `inf`.
std::string roc_to_csv(const RocCurve &curve);

/// JSON document mirroring the populated EvalReport fields.
std::string report_to_json(const EvalReport &report);

}  // namespace slu

#endif  // SLU_METRICS_HPP
