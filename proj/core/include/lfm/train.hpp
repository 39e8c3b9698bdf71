#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lfm/filters.hpp"
#include "lfm/model.hpp"
#include "lfm/tensor.hpp"

namespace lfm {

enum class PreprocKind { none, lowpass, highpass };

std::string_view to_string(PreprocKind p);
PreprocKind parse_preproc(std::string_view s);

/// Image pre-processing arm applied identically at train and eval time.
struct Preproc {
  PreprocKind kind = PreprocKind::none;
  std::size_t m = 3;
  PaddingMode padding = PaddingMode::reflect;

  Image apply(const Image& image) const;
};

struct LabeledImages {
  std::vector<Image> images;
  std::vector<int> labels;

  std::size_t size() const noexcept { return images.size(); }
  bool empty() const noexcept { return images.empty(); }
};

LabeledImages apply_preproc(const LabeledImages& data, const Preproc& preproc);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  Precision precision = Precision::float64;
  Preproc preproc;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;        ///< mean mini-batch loss over the epoch
  double source_acc = 0.0;  ///< accuracy on the (pre-processed) source set after the epoch
  std::optional<double> target_acc;

  /// `epoch=<e> loss=<l> source_acc=<a> target_acc=<t|nan>`
  std::string to_line() const;
};

struct TrainResult {
  Model model;
  double initial_loss = 0.0;  ///< mean loss over the source set before the first step
  std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch SGD with momentum (v <- mu v + g; theta <- theta - lr v) on the
/// source set, batches drawn from a seeded per-epoch shuffle. The optional
/// target set is only evaluated for the log; it never affects the updates.
/// Throws NumericError naming the batch when the loss becomes non-finite.
TrainResult train_source(Model model, const LabeledImages& source, const TrainConfig& cfg,
                         const LabeledImages* target = nullptr,
                         const EpochCallback& on_epoch = {});

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> per_class;  ///< NaN for classes absent from the dataset
};

/// Top-1 accuracy after applying `preproc` to every image.
EvalResult evaluate(const Model& model, const LabeledImages& data, const Preproc& preproc,
                    Precision precision = Precision::float64);

/// Top-1 accuracy on images that are already pre-processed.
EvalResult evaluate_prepared(const Model& model, const LabeledImages& data,
                             Precision precision = Precision::float64);

}  // namespace lfm
