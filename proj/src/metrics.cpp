#include "fndet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fndet/errors.hpp"

namespace fndet {

double accuracy(const std::vector<Label>& predictions, const std::vector<Label>& labels) {
  if (predictions.size() != labels.size())
    throw MetricError("accuracy: " + std::to_string(predictions.size()) +
                      " predictions vs " + std::to_string(labels.size()) + " labels");
  if (predictions.empty()) throw MetricError("accuracy of empty prediction set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

Confusion confusion_counts(const std::vector<Label>& predictions,
                           const std::vector<Label>& labels, Label positive) {
  if (predictions.size() != labels.size())
    throw MetricError("confusion_counts: prediction/label length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred_pos = predictions[i] == positive;
    const bool true_pos = labels[i] == positive;
    if (pred_pos && true_pos)
      ++c.tp;
    else if (pred_pos && !true_pos)
      ++c.fp;
    else if (!pred_pos && true_pos)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

PrecisionRecall precision_recall(const std::vector<Label>& predictions,
                                 const std::vector<Label>& labels, Label positive) {
  const Confusion c = confusion_counts(predictions, labels, positive);
  PrecisionRecall pr;
  if (c.tp + c.fp == 0) {
    pr.precision_degenerate = true;
  } else {
    pr.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    pr.recall_degenerate = true;
  } else {
    pr.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  return pr;
}

double f1(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double roc_auc(const std::vector<double>& scores, const std::vector<Label>& labels,
               Label positive) {
  if (scores.size() != labels.size())
    throw MetricError("roc_auc: score/label length mismatch");
  std::int64_t num_pos = 0;
  for (const Label l : labels) num_pos += l == positive;
  const std::int64_t num_neg = static_cast<std::int64_t>(labels.size()) - num_pos;
  if (num_pos == 0 || num_neg == 0)
    throw MetricError("roc_auc undefined: labels contain a single class");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Descending sweep. Items sharing a score enter together, which makes the
  // trapezoid over the group count each tied (pos, neg) pair as 1/2.
  double area = 0.0;
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    const std::int64_t tp_prev = tp, fp_prev = fp;
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] == positive)
        ++tp;
      else
        ++fp;
      ++i;
    }
    area += static_cast<double>(fp - fp_prev) * static_cast<double>(tp + tp_prev) / 2.0;
  }
  return area / (static_cast<double>(num_pos) * static_cast<double>(num_neg));
}

namespace {

nlohmann::json report_to_json_object(const EvaluationReport& r) {
  nlohmann::json j{
      {"accuracy", r.accuracy},
      {"roc_auc", r.roc_auc},
      {"f1", r.f1},
      {"precision", r.precision},
      {"recall", r.recall},
      {"confusion",
       {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}},
  };
  if (std::isfinite(r.mean_train_loss)) j["mean_train_loss"] = r.mean_train_loss;
  return j;
}

EvaluationReport report_from_json_object(const nlohmann::json& j) {
  EvaluationReport r;
  r.accuracy = j.at("accuracy").get<double>();
  r.roc_auc = j.at("roc_auc").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  if (j.contains("mean_train_loss")) r.mean_train_loss = j["mean_train_loss"].get<double>();
  const auto& c = j.at("confusion");
  r.confusion = {c.at("tp").get<std::int64_t>(), c.at("fp").get<std::int64_t>(),
                 c.at("tn").get<std::int64_t>(), c.at("fn").get<std::int64_t>()};
  return r;
}

}  // namespace

std::string EvaluationReport::to_json() const {
  return report_to_json_object(*this).dump(2);
}

EvaluationReport EvaluationReport::from_json(const std::string& text) {
  return report_from_json_object(nlohmann::json::parse(text));
}

void EvaluationReport::save(const std::filesystem::path& path, int variant_id) const {
  nlohmann::json j = report_to_json_object(*this);
  j["variant_id"] = variant_id;
  std::ofstream out(path);
  if (!out) throw Error("cannot write report: " + path.string());
  out << j.dump(2) << "\n";
}

std::pair<EvaluationReport, int> EvaluationReport::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read report: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    const EvaluationReport r = report_from_json_object(j);
    const int variant_id = j.contains("variant_id") ? j["variant_id"].get<int>() : -1;
    return {r, variant_id};
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed report " + path.string() + ": " + e.what());
  }
}

std::string report_csv_header() { return "Model,Test acc,Train loss,ROC AUC,F1 score"; }

std::string report_csv_row(int variant_id, const EvaluationReport& report) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed << "Model " << variant_id << "," << report.accuracy << ",";
  if (std::isfinite(report.mean_train_loss))
    out << report.mean_train_loss;
  out << "," << report.roc_auc << "," << report.f1;
  return out.str();
}

}  // namespace fndet
