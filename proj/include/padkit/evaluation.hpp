#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "padkit/error.hpp"

namespace padkit::eval {

struct Prediction {
  std::string truth;
  std::string predicted;
};

inline double accuracy(const std::vector<Prediction>& predictions) {
  if (predictions.empty()) throw ValidationError("accuracy of an empty prediction set");
  std::size_t correct = 0;
  for (const auto& p : predictions) correct += p.truth == p.predicted ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

/// counts[t][p]: rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : counts) {
      for (std::size_t c : row) n += c;
    }
    return n;
  }
};

inline ConfusionMatrix confusion_matrix(const std::vector<Prediction>& predictions,
                                        const std::vector<std::string>& class_order) {
  ConfusionMatrix cm{class_order, std::vector<std::vector<std::size_t>>(
                                      class_order.size(), std::vector<std::size_t>(class_order.size(), 0))};
  auto index = [&](const std::string& label) {
    auto it = std::find(class_order.begin(), class_order.end(), label);
    if (it == class_order.end()) throw ValidationError("label '" + label + "' missing from class order");
    return static_cast<std::size_t>(it - class_order.begin());
  };
  for (const auto& p : predictions) ++cm.counts[index(p.truth)][index(p.predicted)];
  return cm;
}

/// Binary score: higher means more likely the positive ("real") class.
struct ScoredSample {
  std::string label;
  double score = 0.0;
};

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // decreasing threshold, (0,0) first, (1,1) last
  double auc = 0.0;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> count_classes(const std::vector<ScoredSample>& samples,
                                                         const std::string& positive) {
  std::size_t pos = 0, neg = 0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) throw ValidationError("ROC scores must be finite");
    (s.label == positive ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) throw ValidationError("ROC needs both positive and negative samples");
  return {pos, neg};
}

}  // namespace detail

/// Sweeps thresholds over {+inf} and every distinct score; a sample is
/// accepted as positive iff score >= threshold. AUC by the trapezoid rule.
inline RocCurve roc_curve(std::vector<ScoredSample> samples, const std::string& positive = "real") {
  const auto [n_pos, n_neg] = detail::count_classes(samples, positive);
  std::sort(samples.begin(), samples.end(), [](const ScoredSample& a, const ScoredSample& b) { return a.score > b.score; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < samples.size();) {
    const double t = samples[i].score;
    for (; i < samples.size() && samples[i].score == t; ++i) (samples[i].label == positive ? tp : fp) += 1;
    curve.points.push_back({t, static_cast<double>(fp) / static_cast<double>(n_neg),
                            static_cast<double>(tp) / static_cast<double>(n_pos)});
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return curve;
}

/// Mann-Whitney form: P(score_pos > score_neg) + 0.5 P(tie), by counting
/// every positive/negative pair.
inline double auc_pair_oracle(const std::vector<ScoredSample>& samples, const std::string& positive = "real") {
  const auto [n_pos, n_neg] = detail::count_classes(samples, positive);
  double wins = 0.0;
  for (const auto& p : samples) {
    if (p.label != positive) continue;
    for (const auto& n : samples) {
      if (n.label == positive) continue;
      if (p.score > n.score) wins += 1.0;
      else if (p.score == n.score) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline std::string format_sig9(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string roc_csv(const RocCurve& curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& p : curve.points) {
    out += format_sig9(p.threshold) + "," + format_sig9(p.fpr) + "," + format_sig9(p.tpr) + "\n";
  }
  return out;
}

inline std::string roc_svg(const RocCurve& curve, const std::string& title = "ROC") {
  constexpr double kSize = 400.0, kMargin = 50.0;
  auto px = [&](double fpr) { return kMargin + fpr * kSize; };
  auto py = [&](double tpr) { return kMargin + (1.0 - tpr) * kSize; };
  char auc[32];
  std::snprintf(auc, sizeof auc, "%.4f", curve.auc);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"500\" height=\"520\" viewBox=\"0 0 500 520\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"500\" height=\"520\" fill=\"white\"/>\n"
      << "  <text x=\"250\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" << title
      << "</text>\n"
      << "  <rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "  <line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
      << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n"
      << "  <polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    if (i) svg << ' ';
    svg << format_sig9(px(curve.points[i].fpr)) << ',' << format_sig9(py(curve.points[i].tpr));
  }
  svg << "\"/>\n"
      << "  <text x=\"250\" y=\"485\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
         "False Positive Rate</text>\n"
      << "  <text x=\"18\" y=\"250\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 250)\">True Positive Rate</text>\n"
      << "  <text x=\"" << px(1) - 10 << "\" y=\"" << py(0) - 12
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"14\">AUC = " << auc << "</text>\n"
      << "</svg>\n";
  return svg.str();
}

struct RocDocuments {
  std::string svg;
  std::string csv;
};

inline RocDocuments render_roc(const RocCurve& curve, const std::string& title = "ROC") {
  return {roc_svg(curve, title), roc_csv(curve)};
}

inline std::string format_confusion(const ConfusionMatrix& cm) {
  std::size_t width = 9;
  for (const auto& c : cm.classes) width = std::max(width, c.size() + 2);
  auto pad = [&](const std::string& s) { return s + std::string(width > s.size() ? width - s.size() : 1, ' '); };
  std::string out = pad("true\\pred");
  for (const auto& c : cm.classes) out += pad(c);
  out += "\n";
  for (std::size_t i = 0; i < cm.classes.size(); ++i) {
    out += pad(cm.classes[i]);
    for (std::size_t n : cm.counts[i]) out += pad(std::to_string(n));
    out += "\n";
  }
  return out;
}

}  // namespace padkit::eval
