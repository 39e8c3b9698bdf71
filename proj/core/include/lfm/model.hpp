#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lfm/filters.hpp"
#include "lfm/model_spec.hpp"
#include "lfm/tensor.hpp"

namespace lfm {

struct Parameter {
  std::string name;
  Tensor value;
  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Architecture plus learnable parameters. The LFM kernel is derived from
/// spec.lfm and held fixed; it is never part of `parameters`.
struct Model {
  ModelSpec spec;
  std::vector<Parameter> parameters;
  std::uint64_t seed = 0;

  const Kernel& lfm_kernel() const;
  std::size_t parameter_count() const;
  const Parameter& parameter(std::string_view name) const;

  friend bool operator==(const Model& a, const Model& b) {
    return a.spec == b.spec && a.parameters == b.parameters && a.seed == b.seed;
  }

 private:
  mutable std::optional<Kernel> kernel_cache_;
};

/// He-normal weights (std sqrt(2 / fan_in)) and zero biases from a seeded stream.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

enum class Precision { float64, float32 };

std::string_view to_string(Precision p);
Precision parse_precision(std::string_view s);

/// Logits (N, K) for a batch (N, C, H, W).
Tensor forward_logits(const Model& model, const Tensor& batch,
                      Precision precision = Precision::float64);

/// Pooled features p(f(x)) (N, D), the classifier input.
Tensor pooled_features(const Model& model, const Tensor& batch,
                       Precision precision = Precision::float64);

struct LossAndGradients {
  double loss = 0.0;
  std::vector<Tensor> gradients;  ///< one per model parameter, same order
};

/// Mean cross-entropy of the batch and its gradient w.r.t. every parameter.
LossAndGradients loss_and_gradients(const Model& model, const Tensor& batch,
                                    std::span<const int> labels,
                                    Precision precision = Precision::float64);

/// Gradient of the mean cross-entropy w.r.t. the input batch.
Tensor input_gradient(const Model& model, const Tensor& batch, std::span<const int> labels);

}  // namespace lfm
