#include "lfm/train.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "lfm/layers.hpp"
#include "lfm/rng.hpp"

namespace lfm {

std::string_view to_string(PreprocKind p) {
  switch (p) {
    case PreprocKind::none: return "none";
    case PreprocKind::lowpass: return "lowpass";
    case PreprocKind::highpass: return "highpass";
  }
  return "?";
}

PreprocKind parse_preproc(std::string_view s) {
  if (s == "none") return PreprocKind::none;
  if (s == "lowpass") return PreprocKind::lowpass;
  if (s == "highpass") return PreprocKind::highpass;
  throw ArgumentError("unknown preproc '" + std::string(s) + "'");
}

Image Preproc::apply(const Image& image) const {
  switch (kind) {
    case PreprocKind::none: return image;
    case PreprocKind::lowpass: return lowpass(image, m, padding);
    case PreprocKind::highpass: return highpass(image, m, padding);
  }
  return image;
}

LabeledImages apply_preproc(const LabeledImages& data, const Preproc& preproc) {
  LabeledImages out;
  out.labels = data.labels;
  out.images.reserve(data.size());
  for (const auto& img : data.images) out.images.push_back(preproc.apply(img));
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ArgumentError("learning_rate must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must lie in [0, 1)");
  if (batch_size == 0) throw ArgumentError("batch_size must be >= 1");
}

std::string EpochRecord::to_line() const {
  char buf[160];
  if (target_acc) {
    std::snprintf(buf, sizeof buf, "epoch=%zu loss=%.9g source_acc=%.6f target_acc=%.6f", epoch,
                  loss, source_acc, *target_acc);
  } else {
    std::snprintf(buf, sizeof buf, "epoch=%zu loss=%.9g source_acc=%.6f target_acc=nan", epoch,
                  loss, source_acc);
  }
  return buf;
}

namespace {

void check_labels(const LabeledImages& data, std::size_t n_classes) {
  if (data.images.size() != data.labels.size()) {
    throw DimensionError("image and label counts differ");
  }
  for (int y : data.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
      throw ArgumentError("label " + std::to_string(y) + " outside [0, " +
                          std::to_string(n_classes) + ")");
    }
  }
}

Tensor gather_batch(const LabeledImages& data, std::span<const std::size_t> idx,
                    std::vector<int>& labels) {
  std::vector<Image> imgs;
  imgs.reserve(idx.size());
  labels.clear();
  for (std::size_t i : idx) {
    imgs.push_back(data.images[i]);
    labels.push_back(data.labels[i]);
  }
  return stack_images(imgs);
}

constexpr std::size_t kEvalChunk = 64;

double mean_loss(const Model& model, const LabeledImages& data, Precision precision) {
  double total = 0.0;
  std::vector<int> labels;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + kEvalChunk); ++i) idx.push_back(i);
    const Tensor batch = gather_batch(data, idx, labels);
    const Tensor logits = forward_logits(model, batch, precision);
    total += softmax_ce_forward(logits, labels) * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(data.size());
}

}  // namespace

EvalResult evaluate_prepared(const Model& model, const LabeledImages& data, Precision precision) {
  if (data.empty()) throw ArgumentError("cannot evaluate on an empty dataset");
  check_labels(data, model.spec.n_classes);
  const std::size_t k = model.spec.n_classes;
  std::vector<std::size_t> correct(k, 0), count(k, 0);
  std::vector<int> labels;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + kEvalChunk); ++i) idx.push_back(i);
    const Tensor batch = gather_batch(data, idx, labels);
    const std::vector<int> pred = argmax_rows(forward_logits(model, batch, precision));
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const auto y = static_cast<std::size_t>(labels[i]);
      ++count[y];
      if (pred[i] == labels[i]) ++correct[y];
    }
  }
  EvalResult r;
  std::size_t total_correct = 0;
  r.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    total_correct += correct[c];
    r.per_class[c] = count[c] ? static_cast<double>(correct[c]) / static_cast<double>(count[c])
                              : std::numeric_limits<double>::quiet_NaN();
  }
  r.accuracy = static_cast<double>(total_correct) / static_cast<double>(data.size());
  return r;
}

EvalResult evaluate(const Model& model, const LabeledImages& data, const Preproc& preproc,
                    Precision precision) {
  return evaluate_prepared(model, apply_preproc(data, preproc), precision);
}

TrainResult train_source(Model model, const LabeledImages& source, const TrainConfig& cfg,
                         const LabeledImages* target, const EpochCallback& on_epoch) {
  cfg.validate();
  if (source.empty()) throw ArgumentError("cannot train on an empty source set");
  check_labels(source, model.spec.n_classes);

  const LabeledImages train = apply_preproc(source, cfg.preproc);
  std::optional<LabeledImages> target_prepared;
  if (target && !target->empty()) target_prepared = apply_preproc(*target, cfg.preproc);

  TrainResult result;
  result.initial_loss = mean_loss(model, train, cfg.precision);

  std::vector<Tensor> velocity;
  for (const auto& p : model.parameters) velocity.emplace_back(p.value.shape());

  Rng rng(derive_seed(cfg.seed, 0x7261696eULL));
  std::vector<std::size_t> order(train.size());
  std::vector<int> labels;
  std::size_t batch_index = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
    }

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Tensor batch = gather_batch(train, idx, labels);
      LossAndGradients lg = loss_and_gradients(model, batch, labels, cfg.precision);
      if (!std::isfinite(lg.loss)) {
        throw NumericError("non-finite loss at batch " + std::to_string(batch_index) +
                           " (epoch " + std::to_string(epoch) + ")");
      }
      loss_sum += lg.loss * static_cast<double>(idx.size());
      for (std::size_t p = 0; p < model.parameters.size(); ++p) {
        auto& theta = model.parameters[p].value;
        auto& v = velocity[p];
        const auto& g = lg.gradients[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
          v[i] = cfg.momentum * v[i] + g[i];
          theta[i] -= cfg.learning_rate * v[i];
        }
      }
      ++batch_index;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(order.size());
    rec.source_acc = evaluate_prepared(model, train, cfg.precision).accuracy;
    if (target_prepared) rec.target_acc = evaluate_prepared(model, *target_prepared, cfg.precision).accuracy;
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace lfm
