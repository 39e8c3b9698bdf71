#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfm/model.hpp"
#include "lfm/tensor.hpp"
#include "lfm/train.hpp"

namespace lfm {

/// A sample is one embedded vector; all samples in a comparison share a dimension.
using Sample = std::vector<double>;

struct MmdReport {
  double mmd2 = 0.0;                  ///< mean of per_bandwidth
  std::vector<double> bandwidths;
  std::vector<double> per_bandwidth;  ///< biased MMD^2 for each bandwidth
  std::size_t n_source = 0;
  std::size_t n_target = 0;

  /// key=value lines: mmd2, n_source, n_target, n_bandwidths, bandwidth.<i>, mmd2.<i>.
  std::string to_key_value() const;
};

/// exp(-|a-b|^2 / (2 sigma^2)).
double gaussian_kernel_value(std::span<const double> a, std::span<const double> b, double sigma);

/// Median pairwise Euclidean distance of the pooled samples. Pools larger
/// than `max_points` are subsampled with a seeded draw after canonical
/// ordering. Returns 1.0 when the median is 0.
double median_heuristic(std::span<const Sample> x, std::span<const Sample> y,
                        std::size_t max_points = 1000, std::uint64_t seed = 0);

/// Biased V-statistic MMD^2 per bandwidth, averaged. When `bandwidths` is
/// empty the set {s/2, s, 2s} around the median heuristic s is used.
/// Results do not depend on sample order.
MmdReport mmd2_biased(std::span<const Sample> x, std::span<const Sample> y,
                      std::vector<double> bandwidths = {});

/// Raw pixel flattening, or pooled model features p(f(x)) when a model is given.
struct Embedding {
  const Model* model = nullptr;

  static Embedding flatten_pixels() { return {}; }
  static Embedding model_features(const Model& m) { return {&m}; }
};

std::vector<Sample> embed_images(std::span<const Image> images, const Embedding& embedding);

/// Pre-process each image, embed, and compare the two sets.
MmdReport domain_gap(std::span<const Image> a, std::span<const Image> b, const Preproc& preproc,
                     const Embedding& embedding = {});

}  // namespace lfm
