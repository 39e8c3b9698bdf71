#include "lfm/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "lfm/rng.hpp"

namespace lfm {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t common_dimension(std::span<const Sample> x, std::span<const Sample> y) {
  const std::size_t d = !x.empty() ? x.front().size() : (!y.empty() ? y.front().size() : 0);
  for (auto set : {x, y}) {
    for (const auto& s : set) {
      if (s.size() != d) {
        throw ArgumentError("sample dimension mismatch: " + std::to_string(s.size()) + " vs " +
                            std::to_string(d));
      }
    }
  }
  return d;
}

// Sample pointers in lexicographic order, so every sum below runs in an
// order independent of how the caller listed the samples.
std::vector<const Sample*> canonical(std::span<const Sample> set) {
  std::vector<const Sample*> out;
  out.reserve(set.size());
  for (const auto& s : set) out.push_back(&s);
  std::sort(out.begin(), out.end(), [](const Sample* a, const Sample* b) { return *a < *b; });
  return out;
}

void mean_kernel(const std::vector<const Sample*>& a, const std::vector<const Sample*>& b,
                 const std::vector<double>& inv_two_sigma2, std::vector<double>& sums) {
  std::fill(sums.begin(), sums.end(), 0.0);
  for (const Sample* p : a) {
    for (const Sample* q : b) {
      const double d2 = squared_distance(*p, *q);
      for (std::size_t k = 0; k < sums.size(); ++k) sums[k] += std::exp(-d2 * inv_two_sigma2[k]);
    }
  }
  const double n = static_cast<double>(a.size()) * static_cast<double>(b.size());
  for (double& s : sums) s /= n;
}

}  // namespace

double gaussian_kernel_value(std::span<const double> a, std::span<const double> b, double sigma) {
  if (a.size() != b.size()) throw ArgumentError("kernel arguments differ in dimension");
  return std::exp(-squared_distance(a, b) / (2.0 * sigma * sigma));
}

double median_heuristic(std::span<const Sample> x, std::span<const Sample> y,
                        std::size_t max_points, std::uint64_t seed) {
  if (x.size() + y.size() < 2) {
    throw ArgumentError("median heuristic needs at least 2 points");
  }
  common_dimension(x, y);
  std::vector<const Sample*> pool;
  for (auto set : {x, y}) {
    auto c = canonical(set);
    pool.insert(pool.end(), c.begin(), c.end());
  }
  std::sort(pool.begin(), pool.end(), [](const Sample* a, const Sample* b) { return *a < *b; });
  if (max_points >= 2 && pool.size() > max_points) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_points; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(max_points);
  }
  std::vector<double> dists;
  dists.reserve(pool.size() * (pool.size() - 1) / 2);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      dists.push_back(std::sqrt(squared_distance(*pool[i], *pool[j])));
    }
  }
  std::sort(dists.begin(), dists.end());
  const std::size_t n = dists.size();
  const double med = n % 2 ? dists[n / 2] : 0.5 * (dists[n / 2 - 1] + dists[n / 2]);
  return med > 0.0 ? med : 1.0;
}

MmdReport mmd2_biased(std::span<const Sample> x, std::span<const Sample> y,
                      std::vector<double> bandwidths) {
  if (x.empty() || y.empty()) throw ArgumentError("MMD needs nonempty samples on both sides");
  common_dimension(x, y);
  if (bandwidths.empty()) {
    const double s = median_heuristic(x, y);
    bandwidths = {0.5 * s, s, 2.0 * s};
  }
  for (double b : bandwidths) {
    if (!(b > 0.0) || !std::isfinite(b)) throw ArgumentError("bandwidths must be positive");
  }
  std::vector<double> inv(bandwidths.size());
  for (std::size_t k = 0; k < bandwidths.size(); ++k) {
    inv[k] = 1.0 / (2.0 * bandwidths[k] * bandwidths[k]);
  }
  const auto cx = canonical(x);
  const auto cy = canonical(y);
  std::vector<double> kxx(bandwidths.size()), kyy(bandwidths.size()), kxy(bandwidths.size());
  mean_kernel(cx, cx, inv, kxx);
  mean_kernel(cy, cy, inv, kyy);
  // outer loop over the lexicographically smaller set keeps mmd2(x,y) == mmd2(y,x) bitwise
  const bool x_first = std::lexicographical_compare(
      cx.begin(), cx.end(), cy.begin(), cy.end(),
      [](const Sample* a, const Sample* b) { return *a < *b; });
  if (x_first) {
    mean_kernel(cx, cy, inv, kxy);
  } else {
    mean_kernel(cy, cx, inv, kxy);
  }

  MmdReport r;
  r.bandwidths = bandwidths;
  r.n_source = x.size();
  r.n_target = y.size();
  r.per_bandwidth.resize(bandwidths.size());
  double total = 0.0;
  for (std::size_t k = 0; k < bandwidths.size(); ++k) {
    r.per_bandwidth[k] = kxx[k] + kyy[k] - 2.0 * kxy[k];
    total += r.per_bandwidth[k];
  }
  r.mmd2 = total / static_cast<double>(bandwidths.size());
  return r;
}

std::string MmdReport::to_key_value() const {
  std::ostringstream os;
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "mmd2=" << num(mmd2) << '\n';
  os << "n_source=" << n_source << '\n';
  os << "n_target=" << n_target << '\n';
  os << "n_bandwidths=" << bandwidths.size() << '\n';
  for (std::size_t k = 0; k < bandwidths.size(); ++k) {
    os << "bandwidth." << k << '=' << num(bandwidths[k]) << '\n';
    os << "mmd2." << k << '=' << num(per_bandwidth[k]) << '\n';
  }
  return os.str();
}

std::vector<Sample> embed_images(std::span<const Image> images, const Embedding& embedding) {
  std::vector<Sample> out;
  out.reserve(images.size());
  if (!embedding.model) {
    for (const auto& img : images) out.emplace_back(img.pixels().begin(), img.pixels().end());
    return out;
  }
  constexpr std::size_t chunk = 64;
  for (std::size_t start = 0; start < images.size(); start += chunk) {
    const std::size_t end = std::min(images.size(), start + chunk);
    const Tensor feats = pooled_features(*embedding.model, stack_images(images.subspan(start, end - start)));
    const std::size_t d = feats.dim(1);
    for (std::size_t i = 0; i < end - start; ++i) {
      out.emplace_back(feats.values().begin() + static_cast<long>(i * d),
                       feats.values().begin() + static_cast<long>((i + 1) * d));
    }
  }
  return out;
}

MmdReport domain_gap(std::span<const Image> a, std::span<const Image> b, const Preproc& preproc,
                     const Embedding& embedding) {
  if (a.empty() || b.empty()) throw ArgumentError("domain_gap needs nonempty image sets");
  const Image& ref = a.front();
  std::vector<Image> pa, pb;
  for (auto [src, dst] : {std::pair{a, &pa}, std::pair{b, &pb}}) {
    for (const auto& img : src) {
      if (!img.same_shape(ref)) {
        throw ArgumentError("mixed image sizes: " + std::to_string(ref.height()) + "x" +
                            std::to_string(ref.width()) + " vs " + std::to_string(img.height()) +
                            "x" + std::to_string(img.width()));
      }
      dst->push_back(preproc.apply(img));
    }
  }
  const auto ea = embed_images(pa, embedding);
  const auto eb = embed_images(pb, embedding);
  return mmd2_biased(ea, eb);
}

}  // namespace lfm
