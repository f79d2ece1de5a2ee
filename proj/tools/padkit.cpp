// padkit: presentation-attack-detection pipeline (synth, split, train, eval, lbp-extract).
//
// Exit codes: 0 success, 1 validation error, 2 runtime/data error,
// 3 numerical abort.

#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "padkit/commands.hpp"

namespace {

std::set<std::string> parse_class_list(const std::string& spec) {
  // Accepts "fake=warped,cut,replay" or "warped,cut,replay".
  std::string list = spec;
  if (auto eq = list.find('='); eq != std::string::npos) {
    if (list.substr(0, eq) != "fake") throw padkit::ValidationError("--binary expects fake=CLASS[,CLASS...]");
    list = list.substr(eq + 1);
  }
  std::set<std::string> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.insert(item);
  }
  if (out.empty()) throw padkit::ValidationError("--binary needs at least one fake class");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace padkit;
  CLI::App app{"padkit - presentation attack detection with a shallow CNN and LBP texture features"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--seed", seed, "Root seed for every random stream")->capture_default_str();
  app.add_flag("--quiet", quiet, "Suppress progress output (results are still printed)");

  // synth
  cli::SynthOptions synth_opt;
  std::string synth_size = "140x140";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic live/spoof PGM corpus")->fallthrough();
  synth->add_option("--out", synth_opt.out, "Corpus root directory")->required();
  synth->add_option("--count", synth_opt.config.count, "Images per class")->capture_default_str();
  synth->add_option("--size", synth_size, "Image size WxH")->capture_default_str();
  synth->add_option("--downsample", synth_opt.config.spoof.downsample, "Spoof resolution-loss factor")->capture_default_str();
  synth->add_option("--blur", synth_opt.config.spoof.blur_radius, "Spoof box-blur radius")->capture_default_str();
  synth->add_option("--noise", synth_opt.config.spoof.noise_sigma, "Spoof noise sigma (gray levels)")->capture_default_str();
  synth->add_option("--halftone-period", synth_opt.config.spoof.halftone_period, "Halftone period (px)")->capture_default_str();
  synth->add_option("--halftone-amplitude", synth_opt.config.spoof.halftone_amplitude, "Halftone amplitude")->capture_default_str();

  // split
  cli::SplitOptions split_opt;
  std::string binary_spec;
  auto* split = app.add_subcommand("split", "Cap, split 50/50 and optionally binarize a manifest (in place)")->fallthrough();
  split->add_option("--manifest", split_opt.manifest, "Manifest CSV")->required();
  auto* cap_opt = split->add_option("--cap", "Maximum images per class");
  split->add_option("--binary", binary_spec, "Merge classes into 'fake': fake=CLASS[,CLASS...]");

  // train
  cli::TrainOptions train_opt;
  std::string train_metrics, train_crops, train_center;
  auto* train = app.add_subcommand("train", "Train the Spoofnet CNN on split=train")->fallthrough();
  train->add_option("--manifest", train_opt.manifest, "Manifest CSV")->required();
  train->add_option("--arch", train_opt.arch, "Architecture")->capture_default_str();
  train->add_option("--epochs", train_opt.config.epochs, "Training epochs")->capture_default_str();
  train->add_option("--lr", train_opt.config.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--batch", train_opt.config.batch_size, "Batch size")->capture_default_str();
  train->add_option("--beta1", train_opt.config.beta1, "Adam beta1")->capture_default_str();
  train->add_option("--beta2", train_opt.config.beta2, "Adam beta2")->capture_default_str();
  train->add_option("--epsilon", train_opt.config.epsilon, "Adam epsilon")->capture_default_str();
  train->add_option("--out", train_opt.model_out, "Output PADM model")->required();
  train->add_option("--metrics", train_metrics, "Per-epoch metrics CSV (default MODEL.metrics.csv)");
  train->add_option("--crops", train_crops, "Crop sidecar CSV (path,x,y,w,h)");
  train->add_option("--center-crop", train_center, "Center-crop every image to WxH");

  // eval
  cli::EvalOptions eval_opt;
  std::string eval_model, eval_roc, eval_crops, eval_center, eval_name;
  auto* evalc = app.add_subcommand("eval", "Score split=test with a CNN model or the LBP classifier")->fallthrough();
  evalc->add_option("--manifest", eval_opt.manifest, "Manifest CSV")->required();
  evalc->add_option("--model", eval_model, "PADM model to evaluate");
  evalc->add_flag("--lbp", eval_opt.lbp, "Use LBP 1-NN (chi-square) trained on split=train");
  evalc->add_option("--grid", eval_opt.grid, "LBP patch grid RxC")->capture_default_str();
  evalc->add_option("--report", eval_opt.report, "Report text file")->required();
  evalc->add_option("--roc", eval_roc, "ROC output prefix (PREFIX.csv, PREFIX.svg)");
  evalc->add_flag("--holdout-validation", eval_opt.holdout_validation, "Exclude validation records from scoring");
  evalc->add_option("--crops", eval_crops, "Crop sidecar CSV (path,x,y,w,h)");
  evalc->add_option("--center-crop", eval_center, "Center-crop every image to WxH");
  evalc->add_option("--dataset-name", eval_name, "Dataset column label in the report");

  // lbp-extract
  cli::LbpExtractOptions lbp_opt;
  std::string lbp_crops, lbp_center;
  auto* lbpx = app.add_subcommand("lbp-extract", "Dump LBP features for every manifest record")->fallthrough();
  lbpx->add_option("--manifest", lbp_opt.manifest, "Manifest CSV")->required();
  lbpx->add_option("--grid", lbp_opt.grid, "Patch grid RxC")->capture_default_str();
  lbpx->add_option("--out", lbp_opt.out, "Feature CSV")->required();
  lbpx->add_option("--crops", lbp_crops, "Crop sidecar CSV (path,x,y,w,h)");
  lbpx->add_option("--center-crop", lbp_center, "Center-crop every image to WxH");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  auto opt_path = [](const std::string& s) { return s.empty() ? std::optional<std::filesystem::path>{} : std::optional<std::filesystem::path>{s}; };
  auto opt_str = [](const std::string& s) { return s.empty() ? std::optional<std::string>{} : std::optional<std::string>{s}; };

  try {
    if (*synth) {
      const auto [w, h] = cli::parse_dims(synth_size, "--size");
      synth_opt.config.width = w;
      synth_opt.config.height = h;
      synth_opt.config.seed = derive_seed(seed, "synth");
      return cli::cmd_synth(synth_opt, std::cout);
    }
    if (*split) {
      split_opt.seed = seed;
      if (*cap_opt) split_opt.cap = cap_opt->as<std::size_t>();
      if (!binary_spec.empty()) split_opt.binary_fake_classes = parse_class_list(binary_spec);
      return cli::cmd_split(split_opt, std::cout);
    }
    if (*train) {
      train_opt.config.seed = seed;
      train_opt.metrics_out = opt_path(train_metrics);
      train_opt.crops = opt_path(train_crops);
      train_opt.center_crop = opt_str(train_center);
      train_opt.quiet = quiet;
      cli::run_train(train_opt, std::cout, std::cerr);
      return 0;
    }
    if (*evalc) {
      eval_opt.model = opt_path(eval_model);
      eval_opt.roc = opt_path(eval_roc);
      eval_opt.crops = opt_path(eval_crops);
      eval_opt.center_crop = opt_str(eval_center);
      eval_opt.dataset_name = opt_str(eval_name);
      eval_opt.quiet = quiet;
      cli::run_eval(eval_opt, std::cout, std::cerr);
      return 0;
    }
    if (*lbpx) {
      lbp_opt.crops = opt_path(lbp_crops);
      lbp_opt.center_crop = opt_str(lbp_center);
      return cli::cmd_lbp_extract(lbp_opt, std::cout);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
