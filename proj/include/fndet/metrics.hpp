#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fndet/corpus.hpp"

namespace fndet {

struct Confusion {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
  std::int64_t total() const { return tp + fp + tn + fn; }
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  // Set when the respective denominator was zero and the value was
  // defined to 0 by convention (e.g. a constant predictor).
  bool precision_degenerate = false;
  bool recall_degenerate = false;
};

// Fraction of positions where prediction equals label.
double accuracy(const std::vector<Label>& predictions, const std::vector<Label>& labels);

Confusion confusion_counts(const std::vector<Label>& predictions,
                           const std::vector<Label>& labels,
                           Label positive = Label::Fake);

PrecisionRecall precision_recall(const std::vector<Label>& predictions,
                                 const std::vector<Label>& labels,
                                 Label positive = Label::Fake);

// Harmonic mean of precision and recall; 0 when both are 0.
double f1(double precision, double recall);

// Area under the ROC curve for scores interpreted as "probability the item
// is `positive`". Computed by a descending threshold sweep with trapezoidal
// area, which equals the tie-aware pairwise (Mann-Whitney) statistic.
// Throws MetricError when labels contain a single class.
double roc_auc(const std::vector<double>& scores, const std::vector<Label>& labels,
               Label positive = Label::Fake);

// One Table-style evaluation row. mean_train_loss is NaN until a training
// run fills it in; serialization omits the field while unset.
struct EvaluationReport {
  double accuracy = 0.0;
  double mean_train_loss = std::numeric_limits<double>::quiet_NaN();
  double roc_auc = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  Confusion confusion;

  std::string to_json() const;
  static EvaluationReport from_json(const std::string& text);
  void save(const std::filesystem::path& path, int variant_id) const;
  // Returns the report plus the variant id stored alongside it (-1 if absent).
  static std::pair<EvaluationReport, int> load(const std::filesystem::path& path);
};

// CSV header and row in the comparison-table column order.
std::string report_csv_header();
std::string report_csv_row(int variant_id, const EvaluationReport& report);

}  // namespace fndet
