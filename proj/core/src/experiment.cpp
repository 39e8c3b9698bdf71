#include "lfm/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace lfm {

std::vector<AblationArm> ablation_arms() {
  return {
      {"baseline", Variant::baseline, PreprocKind::none},
      {"highpass", Variant::baseline, PreprocKind::highpass},
      {"lowpass", Variant::baseline, PreprocKind::lowpass},
      {"ie", Variant::ie, PreprocKind::none},
      {"rsl", Variant::rsl, PreprocKind::none},
  };
}

double median(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

const ArmResult& AblationTable::arm(const std::string& name) const {
  for (const auto& a : arms) {
    if (a.arm.name == name) return a;
  }
  throw ArgumentError("no ablation arm named '" + name + "'");
}

std::string AblationTable::to_text() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %-9s %-9s %5s %8s %8s %8s\n", "arm", "arch", "preproc",
                "runs", "median", "min", "max");
  os << line;
  for (const auto& a : arms) {
    std::snprintf(line, sizeof line, "%-10s %-9s %-9s %5zu %8.4f %8.4f %8.4f\n",
                  a.arm.name.c_str(), std::string(to_string(a.arm.variant)).c_str(),
                  std::string(to_string(a.arm.preproc)).c_str(), a.seeds.size(), a.median_target,
                  a.min_target, a.max_target);
    os << line;
  }
  return os.str();
}

std::string AblationTable::to_records() const {
  std::ostringstream os;
  char buf[256];
  for (const auto& a : arms) {
    for (std::size_t i = 0; i < a.seeds.size(); ++i) {
      std::snprintf(buf, sizeof buf,
                    "record=run arm=%s arch=%s preproc=%s seed=%llu source_acc=%.6f target_acc=%.6f\n",
                    a.arm.name.c_str(), std::string(to_string(a.arm.variant)).c_str(),
                    std::string(to_string(a.arm.preproc)).c_str(),
                    static_cast<unsigned long long>(a.seeds[i]), a.source_acc[i], a.target_acc[i]);
      os << buf;
    }
  }
  for (const auto& a : arms) {
    std::snprintf(buf, sizeof buf,
                  "record=summary arm=%s runs=%zu median_target_acc=%.6f min_target_acc=%.6f "
                  "max_target_acc=%.6f\n",
                  a.arm.name.c_str(), a.seeds.size(), a.median_target, a.min_target, a.max_target);
    os << buf;
  }
  return os.str();
}

AblationTable run_ablation(const LabeledImages& source_train, const LabeledImages& target_test,
                           std::size_t n_classes, InputShape input, const AblationConfig& cfg,
                           const RunCallback& on_run) {
  if (cfg.seeds.empty()) throw ArgumentError("ablation needs at least one seed");
  if (target_test.empty()) throw ArgumentError("ablation needs a nonempty target test set");
  AblationTable table;
  for (const auto& arm : ablation_arms()) {
    ArmResult res;
    res.arm = arm;
    const ModelSpec spec = toy_spec(arm.variant, n_classes, input, cfg.lfm);
    for (std::uint64_t seed : cfg.seeds) {
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      tc.preproc.kind = arm.preproc;
      TrainResult tr = train_source(build_model(spec, seed), source_train, tc, &target_test);
      res.seeds.push_back(seed);
      res.source_acc.push_back(tr.log.empty() ? 0.0 : tr.log.back().source_acc);
      res.target_acc.push_back(
          evaluate(tr.model, target_test, tc.preproc, tc.precision).accuracy);
      if (on_run) on_run(arm, seed, tr);
    }
    res.median_target = median(res.target_acc);
    res.min_target = *std::min_element(res.target_acc.begin(), res.target_acc.end());
    res.max_target = *std::max_element(res.target_acc.begin(), res.target_acc.end());
    table.arms.push_back(std::move(res));
  }
  return table;
}

}  // namespace lfm
