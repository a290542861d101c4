#include "osnd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "osnd/checkpoint.hpp"
#include "osnd/csv.hpp"
#include "osnd/cycle.hpp"
#include "osnd/detect.hpp"
#include "osnd/errors.hpp"
#include "osnd/log.hpp"
#include "osnd/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace osnd {

namespace {

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw FormatError("cannot write " + file.string());
  return out;
}

void write_text(const fs::path& file, const std::string& text) { open_out(file) << text; }

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

std::string field_or_empty(double v) { return std::isnan(v) ? "" : format_double(v); }

double parse_double_field(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw FormatError("bad number '" + s + "'");
  return v;
}

int parse_int_field(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw FormatError("bad integer '" + s + "'");
  return v;
}

struct Loaded {
  Dataset dataset;
  OpenSplit split;
};

Loaded load_split(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("config key 'dataset' is required");
  LoadOptions opts;
  if (cfg.resize > 0) opts.resize = cfg.resize;
  if (!cfg.index_csv.empty()) opts.index_csv = cfg.index_csv;
  Loaded l;
  l.dataset = load_dataset(cfg.dataset, opts);
  if (l.dataset.height != l.dataset.width) {
    throw ShapeMismatch("images must be square; set 'resize'");
  }
  l.split = build_open_split(l.dataset, cfg.split);
  return l;
}

// The manifest written by `split` must list the pool we rebuild now;
// otherwise the dataset or split keys changed between stages.
void check_manifest(const fs::path& file, const OpenSplit& split) {
  const CsvTable t = read_csv(file);
  const std::size_t id = t.column("id");
  const std::size_t role = t.column("role");
  std::vector<std::string> eval;
  std::size_t close = 0;
  for (const auto& row : t.rows) {
    if (row[role] == "eval") {
      eval.push_back(row[id]);
    } else {
      ++close;
    }
  }
  bool same = eval.size() == split.eval_pool.size() && close == split.close_train.size();
  for (std::size_t i = 0; same && i < eval.size(); ++i) same = eval[i] == split.eval_pool[i].id;
  if (!same) {
    throw PipelineError("split", "split manifest does not match the dataset; rerun split");
  }
}

std::map<std::string, std::string> stamp_metadata(const RunConfig& cfg) {
  return {{"config_hash", cfg.hash()}, {"seed", std::to_string(cfg.seed)}};
}

PseudoLabeledSet read_pseudo(const fs::path& file, const OpenSplit& split) {
  const CsvTable t = read_csv(file);
  const std::size_t id = t.column("id");
  const std::size_t label = t.column("pseudo_label");
  const std::size_t source = t.column("source");
  const std::size_t model = t.column("close_model_id");
  if (t.rows.size() != split.eval_pool.size()) {
    throw FormatError(file.string() + " does not match the evaluation pool");
  }
  PseudoLabeledSet pls;
  pls.samples = split.eval_pool;
  pls.num_classes = split.num_close_classes();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row[id] != split.eval_pool[i].id) {
      throw FormatError(file.string() + ": row " + std::to_string(i) + " is " + row[id] +
                        ", expected " + split.eval_pool[i].id);
    }
    const int k = parse_int_field(row[label]);
    if (k < 0 || k >= pls.num_classes) throw FormatError("pseudo label out of range: " + row[label]);
    pls.pseudo_labels.push_back(k);
  }
  if (!t.rows.empty()) {
    const std::string& src = t.rows.front()[source];
    if (src.rfind("fixed_class(", 0) == 0) {
      pls.mode = PseudoMode::fixed(parse_int_field(src.substr(12, src.size() - 13)));
    }
    pls.close_model_id = t.rows.front()[model];
  }
  return pls;
}

void write_histogram(const fs::path& csv, const fs::path& txt, const PseudoHistogram& hist,
                     const std::string& stamp) {
  std::ostringstream c;
  c << "# " << stamp << "\n# entropy=" << format_double(hist.entropy) << "\nclass,count\n";
  for (std::size_t k = 0; k < hist.counts.size(); ++k) c << k << ',' << hist.counts[k] << '\n';
  write_text(csv, c.str());

  std::ostringstream t;
  t << "# " << stamp << '\n'
    << "pseudo labels of latent-open samples\n"
    << "class  count\n";
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    t << std::setw(5) << k << "  " << hist.counts[k] << '\n';
  }
  t << std::fixed << std::setprecision(4) << "entropy (nats) " << hist.entropy << '\n'
    << "ln K           " << std::log(static_cast<double>(hist.counts.size())) << '\n';
  write_text(txt, t.str());
}

CycleState load_detectors(const fs::path& f1, const fs::path& f2) {
  LoadedCheckpoint a = load_checkpoint(f1);
  LoadedCheckpoint b = load_checkpoint(f2);
  CycleState state(std::move(a.net), std::move(b.net));
  state.single_model = a.metadata.count("single_model") && a.metadata.at("single_model") == "true";
  return state;
}

std::vector<bool> truth_of(const std::vector<ScoreRecord>& records) {
  std::vector<bool> truth;
  for (const ScoreRecord& r : records) {
    if (!r.is_open) throw UndefinedMetric("score record " + r.sample_id + " has no ground truth");
    truth.push_back(*r.is_open);
  }
  return truth;
}

const char* variant_name(bool cons, bool clr, bool cycle) {
  if (cons && clr && cycle) return "+cycle training";
  if (cons && clr) return "+cyclic LR";
  if (cons) return "+attention";
  return "none";
}

}  // namespace

void write_scores(const fs::path& file, const std::vector<ScoreRecord>& records,
                  const std::vector<std::string>& comments) {
  std::ofstream out = open_out(file);
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "sample_id,method,pseudo_label,loss_f1,loss_f2,score,is_open\n";
  for (const ScoreRecord& r : records) {
    out << r.sample_id << ',' << to_string(r.method) << ',' << r.pseudo_label << ','
        << field_or_empty(r.loss_f1) << ',' << field_or_empty(r.loss_f2) << ','
        << format_double(r.score) << ',' << (r.is_open ? (*r.is_open ? "1" : "0") : "") << '\n';
  }
}

std::vector<ScoreRecord> read_scores(const fs::path& file) {
  const CsvTable t = read_csv(file);
  const std::size_t id = t.column("sample_id");
  const std::size_t method = t.column("method");
  const std::size_t pseudo = t.column("pseudo_label");
  const std::size_t l1 = t.column("loss_f1");
  const std::size_t l2 = t.column("loss_f2");
  const std::size_t score = t.column("score");
  const std::size_t open = t.column("is_open");
  std::vector<ScoreRecord> records;
  for (const auto& row : t.rows) {
    ScoreRecord r;
    r.sample_id = row[id];
    if (row[method] == "ours") {
      r.method = ScoreMethod::kOurs;
    } else if (row[method] == "msp") {
      r.method = ScoreMethod::kMsp;
    } else {
      throw FormatError("unknown score method '" + row[method] + "'");
    }
    r.pseudo_label = parse_int_field(row[pseudo]);
    r.loss_f1 = parse_double_field(row[l1]);
    r.loss_f2 = parse_double_field(row[l2]);
    r.score = parse_double_field(row[score]);
    if (row[open] == "1") {
      r.is_open = true;
    } else if (row[open] == "0") {
      r.is_open = false;
    } else if (!row[open].empty()) {
      throw FormatError("bad is_open value '" + row[open] + "'");
    }
    records.push_back(std::move(r));
  }
  return records;
}

MetricsReport evaluate_scores(const std::vector<ScoreRecord>& records, const std::string& method,
                              int bins, std::uint64_t seed) {
  MetricsReport report = build_report(records, truth_of(records), bins, seed);
  report.method = method;
  return report;
}

bool parse_stamp(const std::string& line, std::string& hash, std::string& seed) {
  const auto h = line.find("config_hash=");
  const auto s = line.find("seed=");
  if (line.find("osnd") == std::string::npos || h == std::string::npos ||
      s == std::string::npos) {
    return false;
  }
  auto word = [&](std::size_t pos) {
    const std::size_t start = line.find('=', pos) + 1;
    const std::size_t end = line.find_first_of(" \t\r\n", start);
    return line.substr(start, end == std::string::npos ? std::string::npos : end - start);
  };
  hash = word(h);
  seed = word(s);
  return true;
}

Pipeline::Pipeline(RunConfig cfg, PipelineOptions options)
    : cfg_(std::move(cfg)), opts_(std::move(options)) {
  cfg_.validate();
  if (opts_.out_dir.empty()) throw ConfigError("output directory is empty");
}

std::string Pipeline::stamp() const {
  return "osnd config_hash=" + cfg_.hash() + " seed=" + std::to_string(cfg_.seed);
}

void Pipeline::require(const char* name, const std::string& stage) const {
  if (!fs::exists(path(name))) {
    throw PipelineError(stage, "missing " + path(name).string() + "; run '" + stage + "' first");
  }
}

void Pipeline::run(const std::string& stage) {
  fs::create_directories(opts_.out_dir);
  if (stage == "gen-synthetic") return gen_synthetic();
  if (stage == "split") return split();
  if (stage == "train-close") return train_close();
  if (stage == "pseudo") return pseudo();
  if (stage == "cycle-train") return cycle_train();
  if (stage == "score") return score();
  if (stage == "score-online") return score_online();
  if (stage == "baseline-msp") return baseline_msp();
  if (stage == "evaluate") return evaluate();
  if (stage == "report") return report();
  if (stage == "ablation") return ablation();
  throw ConfigError("unknown stage '" + stage + "'");
}

void Pipeline::run_all() {
  for (const char* stage : {"split", "train-close", "pseudo", "cycle-train", "score",
                            "baseline-msp", "evaluate", "report"}) {
    log_info(std::string("stage ") + stage);
    run(stage);
  }
}

void Pipeline::gen_synthetic() {
  if (cfg_.dataset.empty()) throw ConfigError("config key 'dataset' is required");
  SyntheticConfig s = cfg_.synthetic;
  s.seed = cfg_.seed;
  write_synthetic(s, cfg_.dataset);
  std::ostringstream info;
  info << "# " << stamp() << '\n' << "dataset=" << cfg_.dataset.string() << '\n';
  // Kept next to the images so training overrides never invalidate it.
  write_text(cfg_.dataset / "synthetic.txt", info.str());
}

void Pipeline::split() {
  const Loaded l = load_split(cfg_);
  write_split_manifest(path(artifact::kSplitManifest), l.split, {stamp()});
  log_info("split: " + std::to_string(l.split.close_train.size()) + " close-train, " +
           std::to_string(l.split.eval_pool.size()) + " eval (" +
           std::to_string(l.split.num_open()) + " open)");
}

void Pipeline::train_close() {
  require(artifact::kSplitManifest, "split");
  const Loaded l = load_split(cfg_);
  check_manifest(path(artifact::kSplitManifest), l.split);
  const CloseModel close = train_close_model(
      l.split, cfg_.backbone(l.dataset.height, l.split.num_close_classes()), cfg_.train_config());
  auto meta = stamp_metadata(cfg_);
  meta["train_accuracy"] = format_double(close.train_accuracy);
  save_checkpoint(path(artifact::kCloseModel), close.model, meta);
  std::ostringstream log;
  log << "# " << stamp() << "\n# train_accuracy=" << format_double(close.train_accuracy)
      << "\nepoch,loss\n";
  for (std::size_t e = 0; e < close.epoch_losses.size(); ++e) {
    log << e << ',' << format_double(close.epoch_losses[e]) << '\n';
  }
  write_text(path("close_training.csv"), log.str());
  log_info("close model train accuracy " + format_double(close.train_accuracy));
}

void Pipeline::pseudo() {
  require(artifact::kCloseModel, "train-close");
  const Loaded l = load_split(cfg_);
  check_manifest(path(artifact::kSplitManifest), l.split);
  const LoadedCheckpoint close = load_checkpoint(path(artifact::kCloseModel));

  PseudoLabeledSet pls =
      assign_pseudo_labels(close.net, l.split.eval_pool, l.split.eval_is_open, PseudoMode::model());
  const PseudoHistogram hist = pseudo_label_histogram(pls, l.split.eval_is_open);
  if (cfg_.pseudo_source == PseudoSource::kFixedClass) {
    const int k = cfg_.fixed_class >= 0 ? cfg_.fixed_class : most_populated_class(hist);
    if (k >= pls.num_classes) throw ConfigError("fixed_class is not a close class");
    pls = assign_pseudo_labels(close.net, l.split.eval_pool, l.split.eval_is_open,
                               PseudoMode::fixed(k));
  }

  std::ofstream out = open_out(path(artifact::kPseudoLabels));
  out << "# " << stamp() << "\nid,pseudo_label,source,close_model_id\n";
  for (std::size_t i = 0; i < pls.samples.size(); ++i) {
    out << pls.samples[i].id << ',' << pls.pseudo_labels[i] << ',' << pls.mode.name() << ','
        << pls.close_model_id << '\n';
  }
  // The histogram always describes the close model's own labels.
  write_histogram(path(artifact::kPseudoHistogram), path(artifact::kPseudoHistogramText), hist,
                  stamp());
}

void Pipeline::cycle_train() {
  require(artifact::kPseudoLabels, "pseudo");
  const Loaded l = load_split(cfg_);
  const PseudoLabeledSet pls = read_pseudo(path(artifact::kPseudoLabels), l.split);
  const TrainConfig tc = cfg_.train_config();
  const BackboneConfig bb = cfg_.backbone(l.dataset.height, pls.num_classes);

  auto meta = stamp_metadata(cfg_);
  meta["single_model"] = tc.use_cycle_training ? "false" : "true";
  auto observer = [&](const CycleState& s) {
    if (s.epoch % tc.cycle_len != 0 || s.epoch == tc.max_epochs) return;
    const std::string tag = "_epoch" + std::to_string(s.epoch) + ".ckpt";
    save_checkpoint(opts_.out_dir / ("detector_f1" + tag), s.f1, meta);
    save_checkpoint(opts_.out_dir / ("detector_f2" + tag), s.f2, meta);
  };
  const CycleRun run = run_cycle_training(pls, bb, tc, observer);
  save_checkpoint(path(artifact::kDetectorF1), run.state.f1, meta);
  save_checkpoint(path(artifact::kDetectorF2), run.state.f2, meta);

  std::ofstream hist = open_out(path(artifact::kLossHistory));
  hist << "# " << stamp() << "\nepoch,model_id,sample_id,cls_loss\n";
  for (const LossHistoryEntry& e : run.state.loss_history) {
    for (std::size_t i = 0; i < e.losses.size(); ++i) {
      hist << e.epoch << ',' << e.model_id << ',' << pls.samples[i].id << ','
           << format_double(e.losses[i]) << '\n';
    }
  }
  std::ofstream curve = open_out(path(artifact::kLossCurve));
  curve << "# " << stamp() << "\nepoch,model_id,cls,cons,total\n";
  for (const CurveEntry& c : run.state.curve) {
    curve << c.epoch << ',' << c.model_id << ',' << format_double(c.cls) << ','
          << format_double(c.cons) << ',' << format_double(c.total) << '\n';
  }
  if (run.state.fallback_count > 0) {
    log_warn("GMM fell back to the full pool " + std::to_string(run.state.fallback_count) +
             " times");
  }
}

void Pipeline::score() {
  require(artifact::kDetectorF1, "cycle-train");
  require(artifact::kDetectorF2, "cycle-train");
  const Loaded l = load_split(cfg_);
  const PseudoLabeledSet pls = read_pseudo(path(artifact::kPseudoLabels), l.split);
  const CycleState state = load_detectors(path(artifact::kDetectorF1), path(artifact::kDetectorF2));
  std::vector<ScoreRecord> records = score_offline(state, pls);
  attach_truth(records, l.split.eval_is_open);
  write_scores(path(artifact::kScoresOurs), records, {stamp()});
}

void Pipeline::score_online() {
  require(artifact::kDetectorF1, "cycle-train");
  require(artifact::kDetectorF2, "cycle-train");
  require(artifact::kCloseModel, "train-close");
  const Loaded l = load_split(cfg_);
  const CycleState state = load_detectors(path(artifact::kDetectorF1), path(artifact::kDetectorF2));
  const LoadedCheckpoint close = load_checkpoint(path(artifact::kCloseModel));

  std::vector<Sample> pool;
  std::vector<bool> is_open;
  if (cfg_.online_dataset.empty()) {
    pool = l.split.eval_pool;
    is_open = l.split.eval_is_open;
  } else {
    LoadOptions opts;
    if (cfg_.resize > 0) opts.resize = cfg_.resize;
    Dataset extra = load_dataset(cfg_.online_dataset, opts);
    for (Sample& s : extra.samples) {
      const std::string& name = extra.class_names[static_cast<std::size_t>(s.label)];
      const auto it = std::find(l.dataset.class_names.begin(), l.dataset.class_names.end(), name);
      if (it == l.dataset.class_names.end()) {
        throw FormatError("online dataset class '" + name + "' is not in the main dataset");
      }
      const int original = static_cast<int>(it - l.dataset.class_names.begin());
      is_open.push_back(std::find(l.split.open_classes.begin(), l.split.open_classes.end(),
                                  original) != l.split.open_classes.end());
      pool.push_back(std::move(s));
    }
  }
  std::vector<ScoreRecord> records;
  records.reserve(pool.size());
  for (const Sample& s : pool) records.push_back(osnd::score_online(close.net, state, s));
  attach_truth(records, is_open);
  write_scores(path(artifact::kScoresOnline), records, {stamp()});
}

void Pipeline::baseline_msp() {
  require(artifact::kCloseModel, "train-close");
  const Loaded l = load_split(cfg_);
  check_manifest(path(artifact::kSplitManifest), l.split);
  const LoadedCheckpoint close = load_checkpoint(path(artifact::kCloseModel));
  std::vector<ScoreRecord> records = msp_score(close.net, l.split.eval_pool);
  attach_truth(records, l.split.eval_is_open);
  write_scores(path(artifact::kScoresMsp), records, {stamp()});
}

void Pipeline::evaluate() {
  require(artifact::kScoresOurs, "score");
  const std::vector<std::pair<std::string, const char*>> inputs = {
      {"ours", artifact::kScoresOurs},
      {"msp", artifact::kScoresMsp},
      {"online", artifact::kScoresOnline}};
  for (const auto& [method, file] : inputs) {
    if (!fs::exists(path(file))) continue;
    const MetricsReport r = evaluate_scores(read_scores(path(file)), method, cfg_.bins, cfg_.seed);
    json doc = json::parse(r.to_json());
    doc["config_hash"] = cfg_.hash();
    write_text(opts_.out_dir / ("metrics_" + method + ".json"), doc.dump(2) + "\n");
    write_text(opts_.out_dir / ("metrics_" + method + ".txt"), "# " + stamp() + "\n" + r.to_text());
    write_text(opts_.out_dir / ("histogram_" + method + ".csv"),
               "# " + stamp() + "\n" + r.histogram_csv());
  }
}

void Pipeline::report() {
  require("metrics_ours.json", "evaluate");
  const std::string hash = cfg_.hash();
  const std::string seed = std::to_string(cfg_.seed);

  // Every stamped artifact in the directory must come from this config.
  std::vector<std::string> mismatched;
  for (const auto& entry : fs::directory_iterator(opts_.out_dir)) {
    const fs::path& p = entry.path();
    const std::string name = p.filename().string();
    if (name == artifact::kReportJson || name == artifact::kReportText) continue;
    std::string h;
    std::string s;
    bool stamped = false;
    if (p.extension() == ".ckpt") {
      const LoadedCheckpoint c = load_checkpoint(p);
      if (c.metadata.count("config_hash")) {
        h = c.metadata.at("config_hash");
        s = c.metadata.count("seed") ? c.metadata.at("seed") : "";
        stamped = true;
      }
    } else if (p.extension() == ".json") {
      const json doc = read_json(p);
      if (doc.contains("config_hash")) {
        h = doc["config_hash"].get<std::string>();
        s = std::to_string(doc.value("seed", std::uint64_t{0}));
        stamped = true;
      }
    } else if (p.extension() == ".csv" || p.extension() == ".txt") {
      std::ifstream in(p);
      std::string line;
      std::getline(in, line);
      stamped = parse_stamp(line, h, s);
    }
    if (stamped && (h != hash || s != seed)) mismatched.push_back(name);
  }
  std::sort(mismatched.begin(), mismatched.end());
  if (!mismatched.empty()) {
    std::string list;
    for (const auto& m : mismatched) list += " " + m;
    if (!opts_.force) {
      throw ConfigError("artifacts from a different config or seed:" + list +
                        " (use --force to report anyway)");
    }
    log_warn("reporting despite mismatched artifacts:" + list);
  }

  json doc;
  doc["config_hash"] = hash;
  doc["seed"] = cfg_.seed;
  json methods = json::array();
  std::ostringstream text;
  text << "# " << stamp() << '\n'
       << std::left << std::setw(10) << "method" << std::right << std::setw(10) << "AUROC"
       << std::setw(12) << "FPR@TPR95" << std::setw(8) << "close" << std::setw(8) << "open"
       << '\n';
  text << std::fixed << std::setprecision(4);
  for (const char* method : {"ours", "msp", "online"}) {
    const fs::path file = opts_.out_dir / (std::string("metrics_") + method + ".json");
    if (!fs::exists(file)) continue;
    const json m = read_json(file);
    methods.push_back({{"method", method},
                       {"auroc", m["auroc"]},
                       {"fpr_at_tpr95", m["fpr_at_tpr95"]},
                       {"n_close", m["n_close"]},
                       {"n_open", m["n_open"]}});
    text << std::left << std::setw(10) << method << std::right << std::setw(10)
         << m["auroc"].get<double>() << std::setw(12) << m["fpr_at_tpr95"].get<double>()
         << std::setw(8) << m["n_close"].get<int>() << std::setw(8) << m["n_open"].get<int>()
         << '\n';
  }
  doc["methods"] = methods;

  if (fs::exists(path(artifact::kPseudoHistogram))) {
    const CsvTable t = read_csv(path(artifact::kPseudoHistogram));
    std::vector<int> counts;
    for (const auto& row : t.rows) counts.push_back(parse_int_field(row[t.column("count")]));
    const double entropy = count_entropy(counts);
    doc["pseudo_histogram"] = counts;
    doc["pseudo_entropy"] = entropy;
    text << "pseudo-label entropy of open samples " << entropy << " (ln K "
         << std::log(static_cast<double>(counts.size())) << ")\n";
  }
  write_text(path(artifact::kReportJson), doc.dump(2) + "\n");
  write_text(path(artifact::kReportText), text.str());
}

void Pipeline::ablation() {
  require(artifact::kPseudoLabels, "pseudo");
  const Loaded l = load_split(cfg_);
  const PseudoLabeledSet pls = read_pseudo(path(artifact::kPseudoLabels), l.split);
  const BackboneConfig bb = cfg_.backbone(l.dataset.height, pls.num_classes);

  std::ostringstream csv;
  std::ostringstream text;
  csv << "# " << stamp() << "\nvariant,use_consistency,use_cyclic_lr,use_cycle_training,auroc,"
                            "fpr_at_tpr95\n";
  text << "# " << stamp() << '\n'
       << std::left << std::setw(18) << "variant" << std::right << std::setw(10) << "AUROC"
       << std::setw(12) << "FPR@TPR95" << '\n'
       << std::fixed << std::setprecision(4);
  const bool rows[4][3] = {
      {false, false, false}, {true, false, false}, {true, true, false}, {true, true, true}};
  for (const auto& row : rows) {
    TrainConfig tc = cfg_.train_config();
    tc.use_consistency = row[0];
    tc.use_cyclic_lr = row[1];
    tc.use_cycle_training = row[2];
    const char* name = variant_name(row[0], row[1], row[2]);
    log_info(std::string("ablation: ") + name);
    std::vector<ScoreRecord> records = run_cycle_training(pls, bb, tc).scores;
    attach_truth(records, l.split.eval_is_open);
    const MetricsReport r = evaluate_scores(records, name, cfg_.bins, cfg_.seed);
    csv << name << ',' << row[0] << ',' << row[1] << ',' << row[2] << ','
        << format_double(r.auroc) << ',' << format_double(r.fpr_at_tpr95) << '\n';
    text << std::left << std::setw(18) << name << std::right << std::setw(10) << r.auroc
         << std::setw(12) << r.fpr_at_tpr95 << '\n';
  }
  write_text(path(artifact::kAblationCsv), csv.str());
  write_text(path(artifact::kAblationText), text.str());
}

}  // namespace osnd
