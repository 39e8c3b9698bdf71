#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lfm/rng.hpp"
#include "lfm/tensor.hpp"
#include "lfm/train.hpp"

namespace lfm {

// Two-domain shape dataset. Class identity lives in the low frequencies
// (filled shapes); domain B adds texture confined to the high frequencies.

enum class Shape { disk = 0, square = 1, triangle = 2, cross = 3 };
inline constexpr std::size_t kMaxClasses = 4;

enum class TextureKind { checkerboard, bandlimited_noise };
enum class Domain { A = 0, B = 1 };
enum class Split { train, test };

std::string_view to_string(TextureKind k);
std::string_view to_string(Domain d);
std::string_view to_string(Split s);
TextureKind parse_texture_kind(std::string_view s);
Domain parse_domain(std::string_view s);
Split parse_split(std::string_view s);

struct GenConfig {
  std::size_t image_size = 32;
  std::size_t n_classes = 3;
  std::size_t n_per_class_per_domain = 50;
  double texture_amplitude = 0.3;
  TextureKind texture_kind = TextureKind::checkerboard;
  double illumination_gradient = 0.1;
  std::uint64_t seed = 7;

  void validate() const;
  /// key=value lines, one per field.
  std::string to_key_value() const;
};

inline constexpr double kForeground = 0.9;
inline constexpr double kBackground = 0.1;

struct ShapePlacement {
  double center_row = 0.0;
  double center_col = 0.0;
  double scale = 1.0;
};

/// Centered, unit scale.
ShapePlacement centered_placement(std::size_t size);

/// Center jittered by up to 10% of size on each axis, scale by up to 15%.
ShapePlacement random_placement(std::size_t size, Rng& rng);

/// Antialiased (4x4 supersampled) filled shape, foreground 0.9 on background 0.1.
/// Shapes have equal area at equal scale; the disk radius is size/4 * scale.
Image render_shape(std::size_t class_id, std::size_t size, const ShapePlacement& placement);
Image render_shape(std::size_t class_id, std::size_t size, Rng& rng);

/// Domain A: linear illumination ramp in a random direction that changes by
/// cfg.illumination_gradient across one image width. Domain B: the same ramp
/// plus high-frequency texture. Result clamped to [0, 1].
Image apply_domain_style(const Image& image, Domain domain, const GenConfig& cfg, Rng& rng);

/// Zero-mean texture of RMS amplitude `amplitude` whose energy sits in the top
/// third of radial frequency bands (the checkerboard is the Nyquist mode itself).
Image make_texture(std::size_t size, TextureKind kind, double amplitude, Rng& rng);

struct ManifestRecord {
  std::string path;  ///< relative to the dataset root
  std::size_t class_id = 0;
  Domain domain = Domain::A;
  Split split = Split::train;
  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::uint64_t seed = 0;
  std::vector<ManifestRecord> records;

  std::size_t count(Domain d, Split s) const;
  std::size_t count(Domain d, Split s, std::size_t class_id) const;
  /// `path,class_id,domain_id,split` per line.
  std::string to_csv() const;
};

inline constexpr std::string_view kManifestFile = "manifest.csv";
inline constexpr std::string_view kGenConfigFile = "gen_config.txt";

/// One image in memory, with its manifest metadata.
struct GeneratedImage {
  ManifestRecord record;
  Image image;
};

/// All images for cfg, in manifest order, without touching the filesystem.
std::vector<GeneratedImage> generate_images(const GenConfig& cfg);

/// Writes <out>/<domain>/<split>/c<k>_<iiii>.pgm, manifest.csv and gen_config.txt.
DatasetManifest gen_dataset(const GenConfig& cfg, const std::filesystem::path& out_dir);

DatasetManifest read_manifest(const std::filesystem::path& dataset_dir);

/// Images and labels of one domain/split from a dataset on disk.
LabeledImages load_split(const DatasetManifest& manifest, Domain domain, Split split);

/// Every .pgm file below `dir`, in sorted path order.
std::vector<Image> load_images_recursive(const std::filesystem::path& dir);

}  // namespace lfm
