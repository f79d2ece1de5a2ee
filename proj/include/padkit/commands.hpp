#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "padkit/dataset.hpp"
#include "padkit/error.hpp"
#include "padkit/evaluation.hpp"
#include "padkit/lbp.hpp"
#include "padkit/nn/model.hpp"
#include "padkit/nn/serialize.hpp"
#include "padkit/nn/train.hpp"
#include "padkit/random.hpp"
#include "padkit/synth.hpp"

// The pipeline behind each `padkit` subcommand. Every command validates its
// options before touching the filesystem and writes results to `out`;
// progress goes to `log` unless quiet.

namespace padkit::cli {

namespace fs = std::filesystem;

struct GridSize {
  std::size_t rows = 1;
  std::size_t cols = 1;
};

/// Parses "RxC" / "WxH".
inline std::pair<std::size_t, std::size_t> parse_dims(const std::string& text, const char* what) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used_a = 0, used_b = 0;
    const auto a = std::stoul(text.substr(0, x), &used_a);
    const auto b = std::stoul(text.substr(x + 1), &used_b);
    if (used_a != x || used_b != text.size() - x - 1 || a == 0 || b == 0) throw std::invalid_argument(text);
    return {a, b};
  } catch (const std::exception&) {
    throw ValidationError(std::string(what) + " must look like NxM with positive integers, got '" + text + "'");
  }
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// FNV-1a 64-bit fingerprint used to compare artifacts across runs.
inline std::uint64_t fingerprint(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

inline dataset::Preprocess make_preprocess(const dataset::Manifest& manifest, const std::optional<fs::path>& crops,
                                           const std::optional<std::string>& center_crop) {
  dataset::Preprocess pre;
  if (crops) pre.crops = std::make_shared<dataset::CropSidecar>(dataset::read_crop_sidecar(*crops, manifest));
  if (center_crop) pre.center_crop = parse_dims(*center_crop, "--center-crop");
  return pre;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  fs::path out;
  synth::SynthConfig config;
};

inline bool corpus_matches(const SynthOptions& opt) {
  std::ifstream side(opt.out / synth::kConfigSidecar);
  if (!side || !fs::exists(opt.out / "manifest.csv")) return false;
  try {
    if (!(synth::synth_config_from_json(nlohmann::json::parse(side)) == opt.config)) return false;
  } catch (const nlohmann::json::exception&) {
    return false;
  }
  for (std::size_t i = 0; i < opt.config.count; ++i) {
    if (!fs::is_regular_file(opt.out / "real" / synth::sample_name("real", i)) ||
        !fs::is_regular_file(opt.out / "fake" / synth::sample_name("fake", i))) {
      return false;
    }
  }
  return true;
}

inline int cmd_synth(const SynthOptions& opt, std::ostream& out) {
  opt.config.validate();
  const fs::path manifest_path = opt.out / "manifest.csv";
  if (corpus_matches(opt)) {
    out << "corpus identical: " << 2 * opt.config.count << " images already present\n";
    out << "manifest: " << manifest_path.string() << "\n";
    return 0;
  }
  const auto manifest = synth::gen_corpus(opt.config, opt.out);
  dataset::write_manifest(manifest_path, manifest);
  out << manifest.records.size() << " images written\n";
  out << "manifest: " << manifest_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// split

struct SplitOptions {
  fs::path manifest;
  std::uint64_t seed = 0;
  std::optional<std::size_t> cap;
  std::optional<std::set<std::string>> binary_fake_classes;
};

inline int cmd_split(const SplitOptions& opt, std::ostream& out) {
  if (opt.cap && *opt.cap < 1) throw ValidationError("--cap must be at least 1");
  if (opt.binary_fake_classes && opt.binary_fake_classes->empty()) {
    throw ValidationError("--binary needs at least one fake class");
  }
  auto manifest = dataset::read_manifest(opt.manifest);
  if (opt.cap) manifest = dataset::cap_per_class(manifest, *opt.cap, derive_seed(opt.seed, "cap"));
  manifest = dataset::split_half(manifest, derive_seed(opt.seed, "split"));
  if (opt.binary_fake_classes) {
    manifest = dataset::apply_label_schema(
        manifest, {dataset::LabelSchema::Mode::binary, *opt.binary_fake_classes});
  }
  dataset::write_manifest(opt.manifest, manifest);

  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  std::size_t validation = 0;
  for (const auto& r : manifest.records) {
    auto& c = counts[r.label];
    (r.split == dataset::Split::train ? c.first : c.second) += 1;
    validation += r.split == dataset::Split::validation ? 1 : 0;
  }
  for (const auto& [label, c] : counts) {
    out << label << ": " << c.first << " train / " << c.second << " test\n";
  }
  out << "validation: " << validation << " (drawn from test)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  fs::path manifest;
  std::string arch = "spoofnet";
  nn::TrainConfig config;
  fs::path model_out;
  std::optional<fs::path> metrics_out;
  std::optional<fs::path> crops;
  std::optional<std::string> center_crop;
  bool quiet = false;
};

inline void validate(const TrainOptions& opt) {
  if (opt.arch != "spoofnet") throw ValidationError("unknown architecture '" + opt.arch + "' (only spoofnet)");
  if (opt.model_out.empty()) throw ValidationError("--out is required");
  opt.config.validate();
  if (opt.center_crop) parse_dims(*opt.center_crop, "--center-crop");
}

inline std::string metrics_csv(const std::vector<nn::EpochMetrics>& history) {
  std::string csv = "epoch,train_loss,val_accuracy\n";
  for (const auto& m : history) {
    csv += std::to_string(m.epoch) + "," + eval::format_sig9(m.train_loss) + "," +
           eval::format_sig9(m.val_accuracy) + "\n";
  }
  return csv;
}

struct TrainSummary {
  std::uint64_t model_hash = 0;
  std::vector<nn::EpochMetrics> history;
};

inline TrainSummary run_train(const TrainOptions& opt, std::ostream& out, std::ostream& log) {
  validate(opt);
  const auto manifest = dataset::read_manifest(opt.manifest);
  const auto pre = make_preprocess(manifest, opt.crops, opt.center_crop);
  const auto train_records = dataset::select(manifest, dataset::Selection::train);
  if (train_records.empty()) throw ValidationError("manifest has no train records; run `padkit split` first");

  const auto classes = manifest.classes();
  if (classes.size() < 2) throw ValidationError("training needs at least two classes");
  const Image first = dataset::load_image(manifest, train_records.front(), pre);
  const std::size_t outputs = classes.size() == 2 ? 1 : classes.size();
  nn::ModelParams model = nn::build_spoofnet(first.height(), first.width(), outputs, derive_seed(opt.config.seed, "model"));
  model.class_names = classes;

  const auto train_data = dataset::iter_batches(manifest, dataset::Selection::train, opt.config.batch_size,
                                                derive_seed(opt.config.seed, "shuffle"), model.architecture.input,
                                                classes, pre);
  std::optional<dataset::ManifestBatches> val_data;
  if (!dataset::select(manifest, dataset::Selection::validation).empty()) {
    val_data.emplace(dataset::iter_batches(manifest, dataset::Selection::validation, opt.config.batch_size, 0,
                                           model.architecture.input, classes, pre, false));
  }
  if (!opt.quiet) {
    log << "training spoofnet on " << train_data.size() << " images (" << first.width() << "x" << first.height()
        << ", " << classes.size() << " classes, " << opt.config.epochs << " epochs)\n";
  }
  auto result = nn::train(std::move(model), train_data, val_data ? &*val_data : nullptr, opt.config,
                          [&](const nn::EpochMetrics& m) {
                            if (!opt.quiet) {
                              log << "epoch " << m.epoch << " loss " << eval::format_sig9(m.train_loss)
                                  << " val_acc " << eval::format_sig9(m.val_accuracy) << "\n";
                              log.flush();
                            }
                          });
  const auto bytes = nn::save_model(result.model);
  nn::save_model_file(opt.model_out, result.model);
  const fs::path metrics_path = opt.metrics_out ? *opt.metrics_out : fs::path(opt.model_out.string() + ".metrics.csv");
  write_text(metrics_path, metrics_csv(result.history));

  TrainSummary summary{fingerprint(bytes), result.history};
  out << "model: " << opt.model_out.string() << "\n";
  out << "model hash: " << hex64(summary.model_hash) << "\n";
  out << "metrics: " << metrics_path.string() << "\n";
  return summary;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  fs::path manifest;
  std::optional<fs::path> model;
  bool lbp = false;
  std::string grid = "1x1";
  fs::path report;
  std::optional<fs::path> roc;  // output prefix; implied next to the report for binary tasks
  bool holdout_validation = false;
  std::optional<fs::path> crops;
  std::optional<std::string> center_crop;
  std::optional<std::string> dataset_name;
  bool quiet = false;
};

inline void validate(const EvalOptions& opt) {
  if (opt.report.empty()) throw ValidationError("--report is required");
  if (opt.lbp && opt.model) throw ValidationError("--lbp and --model are mutually exclusive");
  if (!opt.lbp && !opt.model) throw ValidationError("either --model or --lbp is required");
  parse_dims(opt.grid, "--grid");
  if (opt.center_crop) parse_dims(*opt.center_crop, "--center-crop");
}

struct EvalSummary {
  double accuracy = 0.0;
  std::optional<double> auc;
  std::size_t samples = 0;
  std::string report;
};

/// Table-style abbreviation of a label set: R/F for real/fake, otherwise
/// initials.
inline std::string label_code(const std::vector<std::string>& classes) {
  if (classes == std::vector<std::string>{"fake", "real"}) return "R/F";
  std::string code;
  for (const auto& c : classes) {
    if (!code.empty()) code += "/";
    code += static_cast<char>(std::toupper(static_cast<unsigned char>(c.empty() ? '?' : c[0])));
  }
  return code;
}

inline std::string positive_label(const std::vector<std::string>& classes) {
  if (std::find(classes.begin(), classes.end(), "real") != classes.end()) return "real";
  return classes.back();
}

/// Relative closeness to the positive gallery: d_neg / (d_pos + d_neg).
inline double lbp_score(double d_pos, double d_neg) {
  if (std::isinf(d_pos) && std::isinf(d_neg)) return 0.5;
  if (std::isinf(d_neg)) return 1.0;
  if (std::isinf(d_pos)) return 0.0;
  if (d_pos + d_neg == 0.0) return 0.5;
  return d_neg / (d_pos + d_neg);
}

inline EvalSummary run_eval(const EvalOptions& opt, std::ostream& out, std::ostream& log) {
  validate(opt);
  const auto [grid_rows, grid_cols] = parse_dims(opt.grid, "--grid");
  const auto manifest = dataset::read_manifest(opt.manifest);
  const auto classes = manifest.classes();
  const bool binary = classes.size() == 2;
  if (opt.roc && !binary) throw ValidationError("ROC requires binary labels (found " + std::to_string(classes.size()) + " classes)");
  const auto pre = make_preprocess(manifest, opt.crops, opt.center_crop);
  const auto test_sel = opt.holdout_validation ? dataset::Selection::test_holdout : dataset::Selection::test;
  const auto test_records = dataset::select(manifest, test_sel);
  if (test_records.empty()) throw ValidationError("manifest has no test records; run `padkit split` first");

  std::vector<eval::Prediction> predictions;
  std::vector<eval::ScoredSample> scored;
  std::string tool;
  const std::string positive = positive_label(classes);

  if (opt.lbp) {
    tool = "LBP (" + opt.grid + " patch)";
    lbp::LbpModel model(grid_rows, grid_cols);
    for (const auto& r : dataset::select(manifest, dataset::Selection::train)) {
      model.add(lbp::extract_feature(dataset::load_image(manifest, r, pre), grid_rows, grid_cols), r.label);
    }
    if (model.empty()) throw ValidationError("manifest has no train records for the LBP gallery");
    if (!opt.quiet) log << "LBP gallery: " << model.size() << " exemplars\n";
    for (const auto& r : test_records) {
      const auto feature = lbp::extract_feature(dataset::load_image(manifest, r, pre), grid_rows, grid_cols);
      predictions.push_back({r.label, model.classify(feature).label});
      if (binary) {
        const auto nearest = model.nearest_per_label(feature);
        double d_pos = std::numeric_limits<double>::infinity(), d_neg = d_pos;
        for (const auto& [label, d] : nearest) (label == positive ? d_pos : d_neg) = d;
        const double score = lbp_score(d_pos, d_neg);
        scored.push_back({r.label, score});
      }
    }
  } else {
    tool = "Modified Spoofnet";
    const auto model = nn::load_model_file(*opt.model);
    if (model.class_names != classes) {
      throw DataError("model classes do not match the manifest classes");
    }
    const auto data = dataset::ManifestBatches(manifest, test_records, classes, model.architecture.input, 1, 0, pre, false);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto sample = data.load(i);
      const Tensor scores = nn::predict(model, sample.input);
      predictions.push_back({test_records[i].label, classes[nn::predicted_class(scores)]});
      if (binary && scores.size() == 1) {
        // Sigmoid output is the probability of class index 1.
        const double p = scores[0];
        scored.push_back({test_records[i].label, classes[1] == positive ? p : 1.0 - p});
      }
    }
  }

  EvalSummary summary;
  summary.samples = predictions.size();
  summary.accuracy = eval::accuracy(predictions);
  const auto cm = eval::confusion_matrix(predictions, classes);
  const std::string dataset_name = opt.dataset_name ? *opt.dataset_name
                                                    : fs::absolute(opt.manifest).parent_path().filename().string();

  std::ostringstream report;
  char acc[32];
  std::snprintf(acc, sizeof acc, "%.2f%%", 100.0 * summary.accuracy);
  report << "Results matrix for individual tools and datasets\n\n";
  report << "tool \\ dataset              " << dataset_name << "\n";
  std::string tool_col = tool;
  tool_col.resize(std::max<std::size_t>(tool_col.size() + 1, 28), ' ');
  report << tool_col << acc << " " << label_code(classes) << "\n\n";
  report << "samples: " << summary.samples << " (test split"
         << (opt.holdout_validation ? ", validation held out" : ", validation included") << ")\n";
  report << "grid: " << (opt.lbp ? opt.grid : std::string("n/a")) << "\n";
  report << "positive class: " << positive << "\n\n";
  report << "confusion matrix (rows = true, columns = predicted)\n" << eval::format_confusion(cm);

  if (binary && !scored.empty()) {
    const auto curve = eval::roc_curve(scored, positive);
    summary.auc = curve.auc;
    char auc[32];
    std::snprintf(auc, sizeof auc, "%.4f", curve.auc);
    report << "\nAUC: " << auc << "\n";
    fs::path prefix = opt.roc ? *opt.roc : opt.report.parent_path() / (opt.report.stem().string() + ".roc");
    const auto docs = eval::render_roc(curve, "ROC: " + tool + " on " + dataset_name);
    write_text(prefix.string() + ".csv", docs.csv);
    write_text(prefix.string() + ".svg", docs.svg);
    report << "roc: " << prefix.filename().string() << ".csv, " << prefix.filename().string() << ".svg\n";
  }
  summary.report = report.str();
  write_text(opt.report, summary.report);
  out << summary.report;
  return summary;
}

// ---------------------------------------------------------------------------
// lbp-extract

struct LbpExtractOptions {
  fs::path manifest;
  std::string grid = "1x1";
  fs::path out;
  std::optional<fs::path> crops;
  std::optional<std::string> center_crop;
};

inline std::string feature_row(const std::string& path, const std::string& label, const lbp::LbpFeature& f) {
  std::string row = path + "," + label + "," + std::to_string(f.grid_rows) + "x" + std::to_string(f.grid_cols);
  for (double v : f.histograms) row += "," + eval::format_sig9(v);
  row += "\n";
  return row;
}

inline int cmd_lbp_extract(const LbpExtractOptions& opt, std::ostream& out) {
  const auto [rows, cols] = parse_dims(opt.grid, "--grid");
  if (opt.out.empty()) throw ValidationError("--out is required");
  const auto manifest = dataset::read_manifest(opt.manifest);
  const auto pre = make_preprocess(manifest, opt.crops, opt.center_crop);
  std::ofstream file(opt.out, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write " + opt.out.string());
  for (const auto& r : manifest.records) {
    file << feature_row(r.path, r.label, lbp::extract_feature(dataset::load_image(manifest, r, pre), rows, cols));
  }
  if (!file) throw DataError("failed writing " + opt.out.string());
  out << manifest.records.size() << " feature rows (" << rows * cols * lbp::kBins << " values each) written to "
      << opt.out.string() << "\n";
  return 0;
}

}  // namespace padkit::cli
