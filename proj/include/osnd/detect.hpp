#pragma once

#include <span>
#include <vector>

#include "osnd/cycle.hpp"
#include "osnd/dataset.hpp"
#include "osnd/model.hpp"
#include "osnd/pseudo.hpp"
#include "osnd/score.hpp"

namespace osnd {

// Per-sample clean classification loss of f1 and f2 against the pseudo
// labels; score is their mean (f1 alone in single-model runs).
std::vector<ScoreRecord> score_offline(const CycleState& state, const PseudoLabeledSet& pls);

// Scores one incoming image without retraining: the frozen close model
// supplies the pseudo label, the trained detectors supply the loss.
ScoreRecord score_online(const Network<float>& close_model, const CycleState& state,
                         const Sample& sample);

// score = 1 - max softmax probability of the close model.
ScoreRecord msp_score(const Network<float>& model, const Sample& sample);
std::vector<ScoreRecord> msp_score(const Network<float>& model, std::span<const Sample> pool);

// Attaches ground truth flags (parallel to records).
void attach_truth(std::vector<ScoreRecord>& records, const std::vector<bool>& is_open);

}  // namespace osnd
