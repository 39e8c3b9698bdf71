#include "lfm/tensorio.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <unistd.h>

namespace lfm {

namespace fs = std::filesystem;

namespace {

class ByteWriter {
 public:
  void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  std::size_t pos() const noexcept { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (pos_ > bytes_.size() || bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated ") + what, pos_);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void magic(std::string_view expected) {
    const std::size_t at = pos_;
    auto s = take(expected.size(), "magic");
    if (std::memcmp(s.data(), expected.data(), expected.size()) != 0) {
      throw FormatError("bad magic, expected '" + std::string(expected) + "'", at);
    }
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

template <typename T>
std::vector<std::uint8_t> encode_tensor_impl(const BasicTensor<T>& t) {
  ByteWriter w;
  w.raw(std::string_view("LFMT"));
  w.u32(kTensorFormatVersion);
  w.u32(static_cast<std::uint32_t>(std::is_same_v<T, float> ? ElementType::f32 : ElementType::f64));
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w.u64(d);
  for (T v : t.values()) {
    if constexpr (std::is_same_v<T, float>) {
      w.u32(std::bit_cast<std::uint32_t>(v));
    } else {
      w.u64(std::bit_cast<std::uint64_t>(v));
    }
  }
  return w.take();
}

template <typename T>
BasicTensor<T> decode_payload(ByteReader& r, std::vector<std::size_t> dims, std::size_t count) {
  std::vector<T> data(count);
  for (auto& v : data) {
    if constexpr (std::is_same_v<T, float>) {
      v = std::bit_cast<float>(r.u32("tensor payload"));
    } else {
      v = std::bit_cast<double>(r.u64("tensor payload"));
    }
  }
  return BasicTensor<T>(std::move(dims), std::move(data));
}

std::atomic<unsigned> temp_counter{0};

}  // namespace

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return bytes;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path tmp =
      dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()) + "_" +
             std::to_string(temp_counter.fetch_add(1)));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("error writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move temporary file onto '" + path.string() + "'");
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::uint8_t quantize_pixel(double v) {
  if (std::isnan(v)) throw ArgumentError("cannot quantize NaN pixel");
  const double scaled = std::floor(v * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

std::vector<std::uint8_t> encode_pgm(const Image& image) {
  if (image.empty()) throw DimensionError("cannot encode an empty image");
  ByteWriter w;
  w.raw(std::string_view("P5\n" + std::to_string(image.width()) + " " +
                         std::to_string(image.height()) + "\n255\n"));
  std::vector<std::uint8_t> px(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) px[i] = quantize_pixel(image.pixels()[i]);
  w.raw(px);
  return w.take();
}

void write_pgm(const fs::path& path, const Image& image) { write_file_atomic(path, encode_pgm(image)); }

Image decode_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("not a binary PGM (expected 'P5')", 0);
  }
  pos = 2;
  const auto is_space = [](std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  };
  const auto read_field = [&](const char* what) -> std::size_t {
    // whitespace and comments before the number
    while (pos < bytes.size()) {
      if (is_space(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size()) throw FormatError(std::string("truncated header, missing ") + what, pos);
    if (bytes[pos] < '0' || bytes[pos] > '9') {
      throw FormatError(std::string("expected digits for ") + what, pos);
    }
    std::size_t v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (std::size_t{1} << 31)) throw FormatError(std::string(what) + " too large", start);
      ++pos;
    }
    return v;
  };
  const std::size_t width = read_field("width");
  const std::size_t height = read_field("height");
  const std::size_t maxval_at = pos;
  const std::size_t maxval = read_field("maxval");
  if (maxval != 255) throw FormatError("unsupported maxval " + std::to_string(maxval), maxval_at);
  if (width == 0 || height == 0) throw FormatError("zero image dimension", maxval_at);
  if (pos >= bytes.size() || !is_space(bytes[pos])) {
    throw FormatError("expected single whitespace after maxval", pos);
  }
  ++pos;
  const std::size_t n = width * height;
  if (bytes.size() - pos < n) {
    throw FormatError("truncated payload: need " + std::to_string(n) + " bytes, have " +
                          std::to_string(bytes.size() - pos),
                      bytes.size());
  }
  Image img(height, width);
  for (std::size_t i = 0; i < n; ++i) img.pixels()[i] = static_cast<double>(bytes[pos + i]) / 255.0;
  return img;
}

Image read_pgm(const fs::path& path) {
  try {
    return decode_pgm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) { return encode_tensor_impl(t); }
std::vector<std::uint8_t> encode_tensor(const TensorF& t) { return encode_tensor_impl(t); }

AnyTensor decode_tensor(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  ByteReader r(bytes, offset);
  r.magic("LFMT");
  const std::size_t version_at = r.pos();
  const std::uint32_t version = r.u32("version");
  if (version != kTensorFormatVersion) {
    throw FormatError("unsupported tensor format version " + std::to_string(version), version_at);
  }
  const std::size_t type_at = r.pos();
  const std::uint32_t type = r.u32("element type");
  if (type > 1) throw FormatError("unknown element type " + std::to_string(type), type_at);
  const std::size_t elem = type == 0 ? 4 : 8;
  const std::uint32_t rank = r.u32("rank");
  if (rank > 32) throw FormatError("implausible rank " + std::to_string(rank), r.pos() - 4);
  std::vector<std::size_t> dims;
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::size_t at = r.pos();
    const std::uint64_t d = r.u64("dims");
    if (d > std::numeric_limits<std::size_t>::max() ||
        (d != 0 && count > std::numeric_limits<std::size_t>::max() / elem / d)) {
      throw FormatError("dimension overflow", at);
    }
    count *= static_cast<std::size_t>(d);
    dims.push_back(static_cast<std::size_t>(d));
  }
  r.need(count * elem, "tensor payload");
  AnyTensor out = type == 0 ? AnyTensor(decode_payload<float>(r, std::move(dims), count))
                            : AnyTensor(decode_payload<double>(r, std::move(dims), count));
  offset = r.pos();
  return out;
}

void write_tensor(const fs::path& path, const Tensor& t) { write_file_atomic(path, encode_tensor(t)); }
void write_tensor(const fs::path& path, const TensorF& t) { write_file_atomic(path, encode_tensor(t)); }

AnyTensor read_tensor(const fs::path& path) {
  const auto bytes = read_file(path);
  std::size_t offset = 0;
  AnyTensor t = decode_tensor(bytes, offset);
  if (offset != bytes.size()) throw FormatError("trailing bytes after tensor", offset);
  return t;
}

Tensor read_tensor_f64(const fs::path& path) {
  AnyTensor t = read_tensor(path);
  if (auto* f = std::get_if<TensorF>(&t)) return f->cast<double>();
  return std::get<Tensor>(std::move(t));
}

std::vector<std::uint8_t> encode_checkpoint(const Model& model) {
  ByteWriter w;
  w.raw(std::string_view("LFMC"));
  w.u32(kCheckpointFormatVersion);
  w.u64(model.seed);
  const std::string spec = serialize(model.spec);
  w.u32(static_cast<std::uint32_t>(spec.size()));
  w.raw(spec);
  w.u32(static_cast<std::uint32_t>(model.parameters.size()));
  for (const auto& p : model.parameters) {
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.raw(p.name);
    w.raw(encode_tensor(p.value));
  }
  return w.take();
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, 0);
  r.magic("LFMC");
  const std::size_t version_at = r.pos();
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointFormatVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  const std::uint64_t seed = r.u64("seed");
  const std::uint32_t spec_len = r.u32("spec length");
  const std::size_t spec_at = r.pos();
  const auto spec_bytes = r.take(spec_len, "model spec");
  ModelSpec spec;
  try {
    spec = parse_model_spec(std::string_view(reinterpret_cast<const char*>(spec_bytes.data()), spec_len));
  } catch (const Error& e) {
    throw FormatError(std::string("invalid embedded model spec: ") + e.what(), spec_at);
  }
  Model model = build_model(spec, seed);
  const std::size_t count_at = r.pos();
  const std::uint32_t n = r.u32("parameter count");
  if (n != model.parameters.size()) {
    throw FormatError("checkpoint has " + std::to_string(n) + " parameters, spec implies " +
                          std::to_string(model.parameters.size()),
                      count_at);
  }
  std::size_t pos = r.pos();
  for (auto& p : model.parameters) {
    ByteReader nr(bytes, pos);
    const std::uint32_t len = nr.u32("parameter name length");
    const std::size_t name_at = nr.pos();
    const auto name = nr.take(len, "parameter name");
    if (std::string_view(reinterpret_cast<const char*>(name.data()), len) != p.name) {
      throw FormatError("unexpected parameter name, expected '" + p.name + "'", name_at);
    }
    pos = nr.pos();
    const std::size_t tensor_at = pos;
    AnyTensor t = decode_tensor(bytes, pos);
    auto* d = std::get_if<Tensor>(&t);
    if (!d) throw FormatError("checkpoint parameters must be f64", tensor_at);
    if (d->shape() != p.value.shape()) {
      throw FormatError("parameter '" + p.name + "' has shape " + Tensor::shape_string(d->shape()) +
                            ", spec implies " + Tensor::shape_string(p.value.shape()),
                        tensor_at);
    }
    p.value = std::move(*d);
  }
  if (pos != bytes.size()) throw FormatError("trailing bytes after checkpoint", pos);
  return model;
}

void write_checkpoint(const fs::path& path, const Model& model) {
  write_file_atomic(path, encode_checkpoint(model));
}

Model read_checkpoint(const fs::path& path) {
  try {
    return decode_checkpoint(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

}  // namespace lfm
