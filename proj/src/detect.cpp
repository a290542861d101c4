#include "osnd/detect.hpp"

#include <cmath>
#include <limits>

#include "osnd/errors.hpp"
#include "osnd/losses.hpp"
#include "osnd/training.hpp"

namespace osnd {

const char* to_string(ScoreMethod method) {
  return method == ScoreMethod::kOurs ? "ours" : "msp";
}

namespace {

ScoreRecord make_record(const std::string& id, int pseudo, double l1, double l2,
                        bool single_model) {
  ScoreRecord r;
  r.sample_id = id;
  r.method = ScoreMethod::kOurs;
  r.pseudo_label = pseudo;
  r.loss_f1 = l1;
  r.loss_f2 = single_model ? l1 : l2;
  r.score = (r.loss_f1 + r.loss_f2) / 2.0;
  return r;
}

ScoreRecord msp_from_logits(const std::string& id, const Eigen::RowVectorXf& logits) {
  const int top = argmax_lowest(logits);
  const double peak = logits(top);
  double denom = 0.0;
  for (Eigen::Index k = 0; k < logits.size(); ++k) denom += std::exp(logits(k) - peak);
  ScoreRecord r;
  r.sample_id = id;
  r.method = ScoreMethod::kMsp;
  r.pseudo_label = top;
  r.loss_f1 = std::numeric_limits<double>::quiet_NaN();
  r.loss_f2 = std::numeric_limits<double>::quiet_NaN();
  r.score = 1.0 - 1.0 / denom;
  return r;
}

}  // namespace

std::vector<ScoreRecord> score_offline(const CycleState& state, const PseudoLabeledSet& pls) {
  if (state.f1.config().num_classes != pls.num_classes ||
      state.f2.config().num_classes != pls.num_classes) {
    throw ConfigError("detector K does not match the pseudo-label K");
  }
  const std::vector<Image> images = pls.images();
  const std::vector<double> l1 = per_sample_losses(state.f1, images, pls.pseudo_labels);
  const std::vector<double> l2 = state.single_model
                                     ? l1
                                     : per_sample_losses(state.f2, images, pls.pseudo_labels);
  std::vector<ScoreRecord> records;
  records.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    records.push_back(
        make_record(pls.samples[i].id, pls.pseudo_labels[i], l1[i], l2[i], state.single_model));
  }
  return records;
}

ScoreRecord score_online(const Network<float>& close_model, const CycleState& state,
                         const Sample& sample) {
  if (close_model.config().num_classes != state.f1.config().num_classes) {
    throw ConfigError("close model K does not match the detectors");
  }
  const std::span<const Image> one(&sample.image, 1);
  const ForwardOutput<float> close_out = forward(close_model, one);
  const int pseudo = argmax_lowest(close_out.logits.row(0));
  const int labels[] = {pseudo};
  const double l1 = per_sample_cls_loss(forward(state.f1, one).logits, labels)(0);
  const double l2 = state.single_model
                        ? l1
                        : per_sample_cls_loss(forward(state.f2, one).logits, labels)(0);
  return make_record(sample.id, pseudo, l1, l2, state.single_model);
}

ScoreRecord msp_score(const Network<float>& model, const Sample& sample) {
  const ForwardOutput<float> out = forward(model, std::span<const Image>(&sample.image, 1));
  return msp_from_logits(sample.id, out.logits.row(0));
}

std::vector<ScoreRecord> msp_score(const Network<float>& model, std::span<const Sample> pool) {
  std::vector<Image> images;
  images.reserve(pool.size());
  for (const Sample& s : pool) images.push_back(s.image);
  const Matrix<float> logits = predict_logits(model, images);
  std::vector<ScoreRecord> records;
  records.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    records.push_back(msp_from_logits(pool[i].id, logits.row(static_cast<Eigen::Index>(i))));
  }
  return records;
}

void attach_truth(std::vector<ScoreRecord>& records, const std::vector<bool>& is_open) {
  if (records.size() != is_open.size()) throw ConfigError("truth flags do not match records");
  for (std::size_t i = 0; i < records.size(); ++i) records[i].is_open = is_open[i];
}

}  // namespace osnd
