#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lfm/model_spec.hpp"
#include "lfm/train.hpp"

namespace lfm {

/// One row of the strategy comparison: an architecture plus an input pre-processing.
struct AblationArm {
  std::string name;
  Variant variant = Variant::baseline;
  PreprocKind preproc = PreprocKind::none;
};

/// baseline, high-pass pre-process, low-pass pre-process, IE, RSL.
std::vector<AblationArm> ablation_arms();

struct ArmResult {
  AblationArm arm;
  std::vector<std::uint64_t> seeds;
  std::vector<double> source_acc;
  std::vector<double> target_acc;
  double median_target = 0.0;
  double min_target = 0.0;
  double max_target = 0.0;
};

struct AblationTable {
  std::vector<ArmResult> arms;

  const ArmResult& arm(const std::string& name) const;
  /// Fixed-width text table, one row per arm.
  std::string to_text() const;
  /// key=value lines, one per (arm, seed) run and one summary per arm.
  std::string to_records() const;
};

struct AblationConfig {
  TrainConfig train;  ///< seed and preproc.kind are overridden per run
  LfmConfig lfm;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

using RunCallback = std::function<void(const AblationArm&, std::uint64_t seed, const TrainResult&)>;

/// Trains every arm for every seed on the source set and reports target accuracy
/// of the final-epoch model.
AblationTable run_ablation(const LabeledImages& source_train, const LabeledImages& target_test,
                           std::size_t n_classes, InputShape input, const AblationConfig& cfg,
                           const RunCallback& on_run = {});

/// Median (mean of the middle pair for even counts).
double median(std::vector<double> values);

}  // namespace lfm
