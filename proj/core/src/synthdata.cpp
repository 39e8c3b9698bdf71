#include "lfm/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "lfm/spectral.hpp"
#include "lfm/tensorio.hpp"

namespace lfm {

namespace fs = std::filesystem;

std::string_view to_string(TextureKind k) {
  return k == TextureKind::checkerboard ? "checkerboard" : "bandlimited_noise";
}
std::string_view to_string(Domain d) { return d == Domain::A ? "A" : "B"; }
std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

TextureKind parse_texture_kind(std::string_view s) {
  if (s == "checkerboard") return TextureKind::checkerboard;
  if (s == "bandlimited_noise" || s == "noise") return TextureKind::bandlimited_noise;
  throw ArgumentError("unknown texture kind '" + std::string(s) + "'");
}

Domain parse_domain(std::string_view s) {
  if (s == "A" || s == "0") return Domain::A;
  if (s == "B" || s == "1") return Domain::B;
  throw ArgumentError("unknown domain '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ArgumentError("unknown split '" + std::string(s) + "'");
}

void GenConfig::validate() const {
  if (image_size < 8) throw ArgumentError("image_size must be >= 8");
  if (n_classes < 2 || n_classes > kMaxClasses) {
    throw ArgumentError("n_classes must be in [2, 4], got " + std::to_string(n_classes));
  }
  if (n_per_class_per_domain == 0) throw ArgumentError("n_per_class_per_domain must be >= 1");
  if (!(texture_amplitude >= 0.0 && texture_amplitude <= 1.0)) {
    throw ArgumentError("texture_amplitude must lie in [0, 1]");
  }
  if (!std::isfinite(illumination_gradient)) throw ArgumentError("illumination_gradient must be finite");
}

std::string GenConfig::to_key_value() const {
  std::ostringstream os;
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "image_size=" << image_size << '\n'
     << "n_classes=" << n_classes << '\n'
     << "n_per_class_per_domain=" << n_per_class_per_domain << '\n'
     << "texture_amplitude=" << num(texture_amplitude) << '\n'
     << "texture_kind=" << to_string(texture_kind) << '\n'
     << "illumination_gradient=" << num(illumination_gradient) << '\n'
     << "seed=" << seed << '\n';
  return os.str();
}

ShapePlacement centered_placement(std::size_t size) {
  const double c = static_cast<double>(size) / 2.0;
  return {c, c, 1.0};
}

ShapePlacement random_placement(std::size_t size, Rng& rng) {
  const double s = static_cast<double>(size);
  ShapePlacement p = centered_placement(size);
  p.center_row += rng.uniform(-0.1, 0.1) * s;
  p.center_col += rng.uniform(-0.1, 0.1) * s;
  p.scale = rng.uniform(0.85, 1.15);
  return p;
}

namespace {

// Point-in-shape for offsets (dy, dx) from the center; r is the disk radius.
bool inside(Shape shape, double dy, double dx, double r) {
  switch (shape) {
    case Shape::disk:
      return dy * dy + dx * dx <= r * r;
    case Shape::square: {
      const double a = r * std::sqrt(std::numbers::pi) / 2.0;  // same area as the disk
      return std::abs(dx) <= a && std::abs(dy) <= a;
    }
    case Shape::triangle: {
      // equilateral, apex up, same area as the disk
      const double circum = r * std::sqrt(4.0 * std::numbers::pi / (3.0 * std::sqrt(3.0)));
      const double inradius = circum / 2.0;
      const double h = std::sqrt(3.0) / 2.0;
      return dy <= inradius && (-h * dx - 0.5 * dy) <= inradius && (h * dx - 0.5 * dy) <= inradius;
    }
    case Shape::cross: {
      const double len = 1.3 * r;
      const double half_width = 0.38 * r;
      return (std::abs(dx) <= half_width && std::abs(dy) <= len) ||
             (std::abs(dy) <= half_width && std::abs(dx) <= len);
    }
  }
  return false;
}

constexpr int kSupersample = 4;

}  // namespace

Image render_shape(std::size_t class_id, std::size_t size, const ShapePlacement& placement) {
  if (class_id >= kMaxClasses) {
    throw ArgumentError("class id " + std::to_string(class_id) + " has no shape");
  }
  const auto shape = static_cast<Shape>(class_id);
  const double r = static_cast<double>(size) / 4.0 * placement.scale;
  Image img(size, size);
  constexpr double inv = 1.0 / (kSupersample * kSupersample);
  for (std::size_t row = 0; row < size; ++row) {
    for (std::size_t col = 0; col < size; ++col) {
      int hits = 0;
      for (int i = 0; i < kSupersample; ++i) {
        const double y = static_cast<double>(row) + (i + 0.5) / kSupersample - placement.center_row;
        for (int j = 0; j < kSupersample; ++j) {
          const double x = static_cast<double>(col) + (j + 0.5) / kSupersample - placement.center_col;
          hits += inside(shape, y, x, r) ? 1 : 0;
        }
      }
      img(row, col) = kBackground + (kForeground - kBackground) * hits * inv;
    }
  }
  return img;
}

Image render_shape(std::size_t class_id, std::size_t size, Rng& rng) {
  return render_shape(class_id, size, random_placement(size, rng));
}

Image make_texture(std::size_t size, TextureKind kind, double amplitude, Rng& rng) {
  if (kind == TextureKind::checkerboard) {
    const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
    return nyquist_checkerboard(size, size, sign * amplitude);
  }
  Image noise(size, size);
  for (double& v : noise.pixels()) v = rng.normal();
  ComplexField spectrum = dft2(noise);
  for (std::size_t u = 0; u < size; ++u) {
    for (std::size_t v = 0; v < size; ++v) {
      if (band_of(u, v, size, size, 3) < 2) spectrum(u, v) = 0.0;
    }
  }
  Image tex = idft2(spectrum).image;
  const double rms = std::sqrt(sum_of_squares(tex) / static_cast<double>(tex.size()));
  const double scale = rms > 0.0 ? amplitude / rms : 0.0;
  for (double& v : tex.pixels()) v *= scale;
  return tex;
}

Image apply_domain_style(const Image& image, Domain domain, const GenConfig& cfg, Rng& rng) {
  const std::size_t h = image.height(), w = image.width();
  Image out = image;
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double cy = static_cast<double>(h) / 2.0, cx = static_cast<double>(w) / 2.0;
  const double slope = cfg.illumination_gradient / static_cast<double>(w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      out(r, c) += slope * ((static_cast<double>(r) + 0.5 - cy) * std::sin(theta) +
                            (static_cast<double>(c) + 0.5 - cx) * std::cos(theta));
    }
  }
  if (domain == Domain::B && cfg.texture_amplitude > 0.0) {
    if (h != w) throw DimensionError("domain texture needs a square image");
    const Image tex = make_texture(h, cfg.texture_kind, cfg.texture_amplitude, rng);
    for (std::size_t i = 0; i < out.size(); ++i) out.pixels()[i] += tex.pixels()[i];
  }
  for (double& v : out.pixels()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::size_t DatasetManifest::count(Domain d, Split s) const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const auto& r) {
    return r.domain == d && r.split == s;
  }));
}

std::size_t DatasetManifest::count(Domain d, Split s, std::size_t class_id) const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [&](const auto& r) {
    return r.domain == d && r.split == s && r.class_id == class_id;
  }));
}

std::string DatasetManifest::to_csv() const {
  std::ostringstream os;
  for (const auto& r : records) {
    os << r.path << ',' << r.class_id << ',' << to_string(r.domain) << ',' << to_string(r.split)
       << '\n';
  }
  return os.str();
}

std::vector<GeneratedImage> generate_images(const GenConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_per_class_per_domain;
  const std::size_t n_test = n / 5;
  const std::size_t n_train = n - n_test;
  std::vector<GeneratedImage> out;
  out.reserve(2 * cfg.n_classes * n);
  for (Domain d : {Domain::A, Domain::B}) {
    for (std::size_t k = 0; k < cfg.n_classes; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t file_index = (static_cast<std::size_t>(d) * cfg.n_classes + k) * n + i;
        Rng rng(derive_seed(cfg.seed, file_index));
        Image img = apply_domain_style(render_shape(k, cfg.image_size, rng), d, cfg, rng);
        // keep the in-memory copy identical to what the PGM file will hold
        for (double& v : img.pixels()) v = static_cast<double>(quantize_pixel(v)) / 255.0;

        GeneratedImage g;
        g.record.class_id = k;
        g.record.domain = d;
        g.record.split = i < n_train ? Split::train : Split::test;
        char name[64];
        std::snprintf(name, sizeof name, "%s/%s/c%zu_%04zu.pgm", std::string(to_string(d)).c_str(),
                      std::string(to_string(g.record.split)).c_str(), k, i);
        g.record.path = name;
        g.image = std::move(img);
        out.push_back(std::move(g));
      }
    }
  }
  return out;
}

DatasetManifest gen_dataset(const GenConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create output directory '" + out_dir.string() + "'");
  }
  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.seed = cfg.seed;
  for (auto& g : generate_images(cfg)) {
    const fs::path p = out_dir / g.record.path;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "'");
    write_pgm(p, g.image);
    manifest.records.push_back(std::move(g.record));
  }
  write_text_atomic(out_dir / kManifestFile, manifest.to_csv());
  write_text_atomic(out_dir / kGenConfigFile, cfg.to_key_value());
  return manifest;
}

DatasetManifest read_manifest(const fs::path& dataset_dir) {
  DatasetManifest m;
  m.root = dataset_dir;
  const auto bytes = read_file(dataset_dir / kManifestFile);
  std::string text(bytes.begin(), bytes.end());
  std::istringstream lines(text);
  std::string line;
  std::size_t offset = 0;
  while (std::getline(lines, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() != 4) throw FormatError("manifest line needs 4 fields: " + line, line_start);
    ManifestRecord r;
    r.path = f[0];
    try {
      r.class_id = std::stoul(f[1]);
      r.domain = parse_domain(f[2]);
      r.split = parse_split(f[3]);
    } catch (const std::exception& e) {
      throw FormatError("bad manifest record '" + line + "': " + e.what(), line_start);
    }
    m.records.push_back(std::move(r));
  }
  if (fs::exists(dataset_dir / kGenConfigFile)) {
    const auto cb = read_file(dataset_dir / kGenConfigFile);
    std::istringstream cl(std::string(cb.begin(), cb.end()));
    while (std::getline(cl, line)) {
      if (line.rfind("seed=", 0) == 0) m.seed = std::stoull(line.substr(5));
    }
  }
  return m;
}

LabeledImages load_split(const DatasetManifest& manifest, Domain domain, Split split) {
  LabeledImages out;
  for (const auto& r : manifest.records) {
    if (r.domain != domain || r.split != split) continue;
    out.images.push_back(read_pgm(manifest.root / r.path));
    out.labels.push_back(static_cast<int>(r.class_id));
  }
  return out;
}

std::vector<Image> load_images_recursive(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_pgm(f));
  return out;
}

}  // namespace lfm
