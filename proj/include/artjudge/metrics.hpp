#pragma once

// Binary classification metrics over (verdict, influence score) predictions.

#include <artjudge/core.hpp>
#include <artjudge/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace artjudge {

struct Confusion {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct MetricBundle {
  double precision = 0.0;
  double recall = 0.0;
  double specificity = 0.0;
  double balanced_accuracy = 0.0;
  double f1_pos = 0.0;
  double macro_f1 = 0.0;
  double mcc = 0.0;
  double roc_auc = 0.5;
  Confusion confusion;
};

inline void to_json(json& j, const Confusion& c) { j = json{{"TP", c.tp}, {"FP", c.fp}, {"TN", c.tn}, {"FN", c.fn}}; }
inline void from_json(const json& j, Confusion& c) {
  j.at("TP").get_to(c.tp);
  j.at("FP").get_to(c.fp);
  j.at("TN").get_to(c.tn);
  j.at("FN").get_to(c.fn);
}

inline void to_json(json& j, const MetricBundle& m) {
  j = json{{"precision", m.precision}, {"recall", m.recall},   {"specificity", m.specificity}, {"balanced_accuracy", m.balanced_accuracy},
           {"f1_pos", m.f1_pos},       {"macro_f1", m.macro_f1}, {"mcc", m.mcc},               {"roc_auc", m.roc_auc},
           {"confusion", m.confusion}};
}
inline void from_json(const json& j, MetricBundle& m) {
  j.at("precision").get_to(m.precision);
  j.at("recall").get_to(m.recall);
  j.at("specificity").get_to(m.specificity);
  j.at("balanced_accuracy").get_to(m.balanced_accuracy);
  j.at("f1_pos").get_to(m.f1_pos);
  j.at("macro_f1").get_to(m.macro_f1);
  j.at("mcc").get_to(m.mcc);
  j.at("roc_auc").get_to(m.roc_auc);
  j.at("confusion").get_to(m.confusion);
}

inline constexpr const char* kMetricNames[] = {"precision", "recall", "specificity", "balanced_accuracy", "f1_pos", "macro_f1", "mcc", "roc_auc"};

inline double metric_value(const MetricBundle& m, std::string_view name) {
  if (name == "precision") return m.precision;
  if (name == "recall") return m.recall;
  if (name == "specificity") return m.specificity;
  if (name == "balanced_accuracy") return m.balanced_accuracy;
  if (name == "f1_pos") return m.f1_pos;
  if (name == "macro_f1") return m.macro_f1;
  if (name == "mcc") return m.mcc;
  if (name == "roc_auc") return m.roc_auc;
  throw DataError("unknown metric '" + std::string(name) + "'");
}

namespace detail {

inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

inline double f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace detail

/// Rates from a confusion matrix; the AUC is left at its default.
inline MetricBundle metrics_from_confusion(const Confusion& c) {
  MetricBundle m;
  m.confusion = c;
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp), tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  m.precision = detail::ratio(tp, tp + fp);
  m.recall = detail::ratio(tp, tp + fn);
  m.specificity = detail::ratio(tn, tn + fp);
  m.balanced_accuracy = (m.recall + m.specificity) / 2.0;
  m.f1_pos = detail::f1(m.precision, m.recall);
  const double npv = detail::ratio(tn, tn + fn);
  m.macro_f1 = (m.f1_pos + detail::f1(npv, m.specificity)) / 2.0;
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  m.mcc = den == 0.0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(den);
  return m;
}

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

/// Step points from sweeping the threshold down through each distinct score.
inline std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw LengthMismatch(std::to_string(scores.size()) + " scores vs " + std::to_string(positive.size()) + " labels");
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double P = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double N = static_cast<double>(positive.size()) - P;
  std::vector<RocPoint> pts{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (positive[order[i]] ? tp : fp) += 1.0;
      ++i;
    }
    pts.push_back({s, detail::ratio(fp, N), detail::ratio(tp, P)});
  }
  return pts;
}

/// Trapezoidal area, which gives tied scores half credit. 0.5 when a class is absent.
inline double roc_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  const auto P = std::count(positive.begin(), positive.end(), true);
  if (P == 0 || P == static_cast<long>(positive.size())) {
    if (scores.size() != positive.size()) throw LengthMismatch("scores and labels differ in length");
    return 0.5;
  }
  const auto pts = roc_curve(scores, positive);
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) / 2.0;
  return area;
}

struct Prediction {
  Verdict verdict = Verdict::No;
  double influence_score = 0.0;
};

inline MetricBundle compute_metrics(const std::vector<Prediction>& preds, const std::vector<Label>& labels) {
  if (preds.size() != labels.size()) throw LengthMismatch(std::to_string(preds.size()) + " predictions vs " + std::to_string(labels.size()) + " labels");
  Confusion c;
  std::vector<double> scores;
  std::vector<bool> pos;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool yes = preds[i].verdict == Verdict::Yes;
    const bool p = labels[i] == Label::Positive;
    (p ? (yes ? c.tp : c.fn) : (yes ? c.fp : c.tn)) += 1;
    scores.push_back(preds[i].influence_score);
    pos.push_back(p);
  }
  auto m = metrics_from_confusion(c);
  m.roc_auc = roc_auc(scores, pos);
  return m;
}

/// The trivial lower bound: YES for every pair at a constant score.
inline MetricBundle always_yes(const std::vector<Label>& labels) {
  return compute_metrics(std::vector<Prediction>(labels.size(), Prediction{Verdict::Yes, 1.0}), labels);
}

/// NO-rate among the negatives of each tier.
inline std::map<Tier, double> tier_rejection(const std::vector<Prediction>& preds, const std::vector<Label>& labels,
                                             const std::vector<std::optional<Tier>>& tiers) {
  if (preds.size() != labels.size() || preds.size() != tiers.size()) throw LengthMismatch("predictions, labels and tiers differ in length");
  std::map<Tier, std::pair<long, long>> counts;  // rejected, total
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] != Label::Negative) continue;
    if (!tiers[i]) throw MissingTierError("negative at position " + std::to_string(i) + " has no tier");
    auto& [rej, tot] = counts[*tiers[i]];
    ++tot;
    rej += preds[i].verdict == Verdict::No ? 1 : 0;
  }
  std::map<Tier, double> out;
  for (const auto& [t, c] : counts) out[t] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

/// Threshold over the distinct scores that maximizes MCC (YES iff score > theta);
/// ties go to the smaller threshold.
inline double tune_threshold(const std::vector<double>& scores, const std::vector<Label>& labels, double fallback) {
  if (scores.size() != labels.size()) throw LengthMismatch("scores and labels differ in length");
  if (scores.empty()) return fallback;
  std::vector<double> grid(scores);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double best_theta = grid.front();
  double best_mcc = -2.0;
  for (double t : grid) {
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool yes = scores[i] > t;
      const bool p = labels[i] == Label::Positive;
      (p ? (yes ? c.tp : c.fn) : (yes ? c.fp : c.tn)) += 1;
    }
    const double m = metrics_from_confusion(c).mcc;
    if (m > best_mcc) {
      best_mcc = m;
      best_theta = t;
    }
  }
  return best_theta;
}

}  // namespace artjudge
