#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "osnd/metrics.hpp"
#include "osnd/pseudo.hpp"
#include "osnd/run_config.hpp"
#include "osnd/score.hpp"

namespace osnd {

inline const std::vector<std::string> kStages = {
    "gen-synthetic", "split",    "train-close", "pseudo", "cycle-train", "score",
    "score-online",  "baseline-msp", "evaluate", "report", "ablation"};

// Artifact names inside the output directory.
namespace artifact {
inline constexpr const char* kSplitManifest = "split_manifest.csv";
inline constexpr const char* kCloseModel = "close_model.ckpt";
inline constexpr const char* kPseudoLabels = "pseudo_labels.csv";
inline constexpr const char* kPseudoHistogram = "pseudo_histogram.csv";
inline constexpr const char* kPseudoHistogramText = "pseudo_histogram.txt";
inline constexpr const char* kDetectorF1 = "detector_f1.ckpt";
inline constexpr const char* kDetectorF2 = "detector_f2.ckpt";
inline constexpr const char* kLossHistory = "loss_history.csv";
inline constexpr const char* kLossCurve = "loss_curve.csv";
inline constexpr const char* kScoresOurs = "scores_ours.csv";
inline constexpr const char* kScoresOnline = "scores_online.csv";
inline constexpr const char* kScoresMsp = "scores_msp.csv";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportText = "report.txt";
inline constexpr const char* kAblationCsv = "ablation.csv";
inline constexpr const char* kAblationText = "ablation.txt";
}  // namespace artifact

struct PipelineOptions {
  std::filesystem::path out_dir;
  bool force = false;  // report accepts artifacts from other configs
};

// One stage per call; stages talk to each other only through files in
// out_dir. Every artifact carries the config hash and the seed.
class Pipeline {
 public:
  Pipeline(RunConfig cfg, PipelineOptions options);

  void run(const std::string& stage);
  void run_all();  // split through report, plus gen-synthetic when asked

  void gen_synthetic();
  void split();
  void train_close();
  void pseudo();
  void cycle_train();
  void score();
  void score_online();
  void baseline_msp();
  void evaluate();
  void report();
  void ablation();

  const RunConfig& config() const { return cfg_; }
  const std::filesystem::path& out_dir() const { return opts_.out_dir; }
  // "osnd config_hash=<hash> seed=<seed>"; writers prefix "# ".
  std::string stamp() const;

 private:
  std::filesystem::path path(const char* name) const { return opts_.out_dir / name; }
  void require(const char* name, const std::string& stage) const;

  RunConfig cfg_;
  PipelineOptions opts_;
};

// Scores CSV: sample_id,method,pseudo_label,loss_f1,loss_f2,score,is_open.
// NaN losses and unknown truth are written as empty fields.
void write_scores(const std::filesystem::path& file, const std::vector<ScoreRecord>& records,
                  const std::vector<std::string>& comments = {});
std::vector<ScoreRecord> read_scores(const std::filesystem::path& file);

// Report over scores that all carry ground truth.
MetricsReport evaluate_scores(const std::vector<ScoreRecord>& records, const std::string& method,
                              int bins, std::uint64_t seed);

// Pulls "config_hash=..." and "seed=..." out of a stamp comment. Returns
// false when the line is not a stamp.
bool parse_stamp(const std::string& line, std::string& hash, std::string& seed);

}  // namespace osnd
