#pragma once

#include <optional>
#include <string>

namespace osnd {

enum class ScoreMethod { kOurs, kMsp };

const char* to_string(ScoreMethod method);

// One open-set score. Higher score = more likely open, for every method.
// MSP records carry NaN in loss_f1/loss_f2.
struct ScoreRecord {
  std::string sample_id;
  ScoreMethod method = ScoreMethod::kOurs;
  int pseudo_label = 0;
  double loss_f1 = 0.0;
  double loss_f2 = 0.0;
  double score = 0.0;
  std::optional<bool> is_open;
};

}  // namespace osnd
