#include "lfm/model.hpp"

#include <cmath>
#include <string>

#include "lfm/layers.hpp"
#include "lfm/lowfreq.hpp"
#include "lfm/rng.hpp"

namespace lfm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Index of each stage's first parameter, or -1 for parameter-free stages.
std::vector<long> parameter_slots(const ModelSpec& spec) {
  std::vector<long> slots;
  long next = 0;
  for (const auto& l : spec.stages) {
    const bool has_params = std::holds_alternative<layer::Conv>(l) ||
                            std::holds_alternative<layer::RslBlock>(l) ||
                            std::holds_alternative<layer::Linear>(l);
    slots.push_back(has_params ? next : -1);
    if (has_params) next += 2;
  }
  return slots;
}

template <typename T>
class Executor {
 public:
  explicit Executor(const Model& model)
      : model_(model),
        kernel_(model.lfm_kernel()),
        slots_(parameter_slots(model.spec)) {
    params_.reserve(model.parameters.size());
    for (const auto& p : model.parameters) params_.push_back(p.value.cast<T>());
  }

  /// Runs stages [0, stop). activations[i] is the input of stage i.
  BasicTensor<T> run(BasicTensor<T> x, std::size_t stop, std::vector<BasicTensor<T>>* activations) {
    const auto& stages = model_.spec.stages;
    for (std::size_t i = 0; i < stop; ++i) {
      if (activations) activations->push_back(x);
      x = std::visit(
          overloaded{
              [&](const layer::Conv& c) {
                return conv2d_forward(x, weight(i), bias(i), c.stride);
              },
              [&](const layer::Relu&) { return relu_forward(x); },
              [&](const layer::RslBlock&) {
                return rsl_block_forward(x, weight(i), bias(i), model_.spec.lfm.with_stride(2));
              },
              [&](const layer::Lfm&) {
                return lfm_forward(x, kernel_, model_.spec.lfm.padding, 1);
              },
              [&](const layer::GlobalAvgPool&) { return gap_forward(x); },
              [&](const layer::Linear&) { return linear_forward(x, weight(i), bias(i)); },
          },
          stages[i]);
    }
    return x;
  }

  /// Backpropagates dL/d(output of the last stage); fills parameter grads and returns dL/dx.
  BasicTensor<T> backward(BasicTensor<T> grad, const std::vector<BasicTensor<T>>& activations,
                          std::vector<BasicTensor<T>>& param_grads) {
    const auto& stages = model_.spec.stages;
    param_grads.assign(params_.size(), BasicTensor<T>());
    for (std::size_t k = stages.size(); k-- > 0;) {
      const BasicTensor<T>& in = activations[k];
      const long slot = slots_[k];
      grad = std::visit(
          overloaded{
              [&](const layer::Conv& c) {
                ConvGrads<T> g = conv2d_backward(grad, in, weight(k), c.stride);
                param_grads[static_cast<std::size_t>(slot)] = std::move(g.dw);
                param_grads[static_cast<std::size_t>(slot) + 1] = std::move(g.db);
                return std::move(g.dx);
              },
              [&](const layer::Relu&) { return relu_backward(grad, in); },
              [&](const layer::RslBlock&) {
                RslGrads<T> g =
                    rsl_block_backward(grad, in, weight(k), model_.spec.lfm.with_stride(2));
                param_grads[static_cast<std::size_t>(slot)] = std::move(g.dw);
                param_grads[static_cast<std::size_t>(slot) + 1] = std::move(g.db);
                return std::move(g.dx);
              },
              [&](const layer::Lfm&) {
                return lfm_backward(grad, kernel_, model_.spec.lfm.padding, 1, in.shape());
              },
              [&](const layer::GlobalAvgPool&) { return gap_backward(grad, in.shape()); },
              [&](const layer::Linear&) {
                LinearGrads<T> g = linear_backward(grad, in, weight(k));
                param_grads[static_cast<std::size_t>(slot)] = std::move(g.dw);
                param_grads[static_cast<std::size_t>(slot) + 1] = std::move(g.db);
                return std::move(g.dx);
              },
          },
          stages[k]);
    }
    return grad;
  }

 private:
  const BasicTensor<T>& weight(std::size_t stage) const {
    return params_[static_cast<std::size_t>(slots_[stage])];
  }
  const BasicTensor<T>& bias(std::size_t stage) const {
    return params_[static_cast<std::size_t>(slots_[stage]) + 1];
  }

  const Model& model_;
  const Kernel& kernel_;
  std::vector<long> slots_;
  std::vector<BasicTensor<T>> params_;
};

void check_batch(const Model& model, const Tensor& batch) {
  require_rank4(batch, "model input");
  const auto& in = model.spec.input;
  if (batch.c() != in.channels || batch.h() != in.height || batch.w() != in.width) {
    throw DimensionError("model expects inputs (N, " + std::to_string(in.channels) + ", " +
                         std::to_string(in.height) + ", " + std::to_string(in.width) + "), got " +
                         Tensor::shape_string(batch.shape()));
  }
}

template <typename T>
Tensor run_until(const Model& model, const Tensor& batch, std::size_t stop) {
  check_batch(model, batch);
  Executor<T> exec(model);
  return exec.run(batch.cast<T>(), stop, nullptr).template cast<double>();
}

template <typename T>
LossAndGradients loss_and_gradients_impl(const Model& model, const Tensor& batch,
                                         std::span<const int> labels) {
  check_batch(model, batch);
  Executor<T> exec(model);
  std::vector<BasicTensor<T>> acts;
  const BasicTensor<T> logits = exec.run(batch.cast<T>(), model.spec.stages.size(), &acts);
  LossAndGradients out;
  out.loss = static_cast<double>(softmax_ce_forward(logits, labels));
  std::vector<BasicTensor<T>> grads;
  exec.backward(softmax_ce_backward(logits, labels), acts, grads);
  out.gradients.reserve(grads.size());
  for (const auto& g : grads) out.gradients.push_back(g.template cast<double>());
  return out;
}

}  // namespace

const Kernel& Model::lfm_kernel() const {
  if (!kernel_cache_) kernel_cache_.emplace(gaussian_kernel(spec.lfm.m, spec.lfm.normalization));
  return *kernel_cache_;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters) n += p.value.size();
  return n;
}

const Parameter& Model::parameter(std::string_view name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return p;
  }
  throw ArgumentError("model has no parameter '" + std::string(name) + "'");
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  validate(spec);
  Model model;
  model.spec = spec;
  model.seed = seed;
  Rng rng(seed);
  const auto he = [&](std::vector<std::size_t> shape, std::size_t fan_in) {
    Tensor t(std::move(shape));
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : t.values()) v = scale * rng.normal();
    return t;
  };
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    const std::string prefix = "stage" + std::to_string(i);
    std::visit(overloaded{
                   [&](const layer::Conv& c) {
                     model.parameters.push_back(
                         {prefix + ".conv.weight",
                          he({c.c_out, c.c_in, c.kernel, c.kernel}, c.c_in * c.kernel * c.kernel)});
                     model.parameters.push_back({prefix + ".conv.bias", Tensor({c.c_out})});
                   },
                   [&](const layer::RslBlock& r) {
                     model.parameters.push_back(
                         {prefix + ".rsl.weight", he({r.c_out, r.c_in, 1, 1}, r.c_in)});
                     model.parameters.push_back({prefix + ".rsl.bias", Tensor({r.c_out})});
                   },
                   [&](const layer::Linear& l) {
                     model.parameters.push_back(
                         {prefix + ".linear.weight", he({l.d_out, l.d_in}, l.d_in)});
                     model.parameters.push_back({prefix + ".linear.bias", Tensor({l.d_out})});
                   },
                   [](const auto&) {},
               },
               spec.stages[i]);
  }
  return model;
}

std::string_view to_string(Precision p) { return p == Precision::float64 ? "double" : "single"; }

Precision parse_precision(std::string_view s) {
  if (s == "double" || s == "f64") return Precision::float64;
  if (s == "single" || s == "f32") return Precision::float32;
  throw ArgumentError("unknown precision '" + std::string(s) + "'");
}

Tensor forward_logits(const Model& model, const Tensor& batch, Precision precision) {
  const std::size_t stop = model.spec.stages.size();
  return precision == Precision::float64 ? run_until<double>(model, batch, stop)
                                         : run_until<float>(model, batch, stop);
}

Tensor pooled_features(const Model& model, const Tensor& batch, Precision precision) {
  const std::size_t stop = model.spec.stages.size() - 1;  // everything but the classifier
  return precision == Precision::float64 ? run_until<double>(model, batch, stop)
                                         : run_until<float>(model, batch, stop);
}

LossAndGradients loss_and_gradients(const Model& model, const Tensor& batch,
                                    std::span<const int> labels, Precision precision) {
  return precision == Precision::float64 ? loss_and_gradients_impl<double>(model, batch, labels)
                                         : loss_and_gradients_impl<float>(model, batch, labels);
}

Tensor input_gradient(const Model& model, const Tensor& batch, std::span<const int> labels) {
  check_batch(model, batch);
  Executor<double> exec(model);
  std::vector<Tensor> acts;
  const Tensor logits = exec.run(batch, model.spec.stages.size(), &acts);
  std::vector<Tensor> grads;
  return exec.backward(softmax_ce_backward(logits, labels), acts, grads);
}

}  // namespace lfm
