#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "osnd/errors.hpp"
#include "osnd/log.hpp"
#include "osnd/pipeline.hpp"
#include "osnd/run_config.hpp"

namespace {

const char* describe(const std::string& stage) {
  if (stage == "gen-synthetic") return "write a synthetic dataset to the 'dataset' path";
  if (stage == "split") return "build the close-train / evaluation split manifest";
  if (stage == "train-close") return "train the close-set classifier";
  if (stage == "pseudo") return "pseudo-label the evaluation pool with the close model";
  if (stage == "cycle-train") return "co-train the two detectors on the pseudo labels";
  if (stage == "score") return "score the evaluation pool with the detectors";
  if (stage == "score-online") return "score samples one at a time with frozen models";
  if (stage == "baseline-msp") return "score the evaluation pool with max softmax probability";
  if (stage == "evaluate") return "compute AUROC, FPR@TPR95 and histograms for every score file";
  if (stage == "report") return "summarize the metrics after checking artifact stamps";
  return "run the four-row component ablation";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-set recognition by noisy pseudo-label detection"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string open_classes;
  std::optional<double> lambda;
  std::optional<int> epochs;
  std::string dataset;
  std::vector<std::string> overrides;
  bool no_consistency = false;
  bool no_cyclic_lr = false;
  bool no_cycle_training = false;
  bool force = false;
  bool quiet = false;

  app.add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (default: $OSND_OUT or ./osnd_out)");
  app.add_option("--seed", seed, "root seed");
  app.add_option("--open-classes", open_classes, "comma-separated open class indices, e.g. 5,6");
  app.add_option("--lambda", lambda, "consistency loss weight");
  app.add_option("--epochs", epochs, "cycle-training epochs");
  app.add_option("--dataset", dataset, "dataset root directory");
  app.add_option("--set", overrides, "extra key=value config override (repeatable)");
  app.add_flag("--no-consistency", no_consistency, "drop the attention consistency loss");
  app.add_flag("--no-cyclic-lr", no_cyclic_lr, "keep the learning rate constant");
  app.add_flag("--no-cycle-training", no_cycle_training, "train a single detector");
  app.add_flag("--force", force, "report even when artifact stamps disagree");
  app.add_flag("--quiet", quiet, "only log warnings and errors");

  std::string stage;
  for (const std::string& name : osnd::kStages) {
    app.add_subcommand(name, describe(name))->callback([&stage, name] { stage = name; });
  }

  CLI11_PARSE(app, argc, argv);
  osnd::set_log_level(quiet ? osnd::LogLevel::kWarn : osnd::LogLevel::kInfo);

  try {
    osnd::RunConfig cfg;
    if (!config_path.empty()) cfg = osnd::load_run_config(config_path);
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw osnd::ConfigError("--set expects key=value, got " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!dataset.empty()) cfg.dataset = dataset;
    if (seed) cfg.seed = *seed;
    if (!open_classes.empty()) cfg.split.open_classes = osnd::parse_int_list(open_classes);
    if (lambda) cfg.train.lambda = *lambda;
    if (epochs) cfg.train.max_epochs = *epochs;
    if (no_consistency) cfg.train.use_consistency = false;
    if (no_cyclic_lr) cfg.train.use_cyclic_lr = false;
    if (no_cycle_training) cfg.train.use_cycle_training = false;

    osnd::PipelineOptions opts;
    if (!out_dir.empty()) {
      opts.out_dir = out_dir;
    } else if (const char* env = std::getenv("OSND_OUT"); env && *env) {
      opts.out_dir = env;
    } else {
      opts.out_dir = "osnd_out";
    }
    opts.force = force;

    osnd::Pipeline pipeline(cfg, opts);
    pipeline.run(stage);
  } catch (const osnd::PipelineError& e) {
    std::cerr << "error: " << e.what() << " (missing stage: " << e.missing_stage() << ")\n";
    return 3;
  } catch (const osnd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
