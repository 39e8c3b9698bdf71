#include "lfm/model_spec.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <string>

namespace lfm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void LfmConfig::validate() const {
  if (m < 3 || m % 2 == 0) {
    throw ArgumentError("LFM kernel size m must be odd and >= 3, got " + std::to_string(m));
  }
  if (stride != 1 && stride != 2) {
    throw ArgumentError("LFM stride must be 1 or 2, got " + std::to_string(stride));
  }
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::ie: return "ie";
    case Variant::rsl: return "rsl";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "baseline") return Variant::baseline;
  if (s == "ie") return Variant::ie;
  if (s == "rsl") return Variant::rsl;
  throw ArgumentError("unknown architecture '" + std::string(s) + "'");
}

std::vector<InputShape> stage_shapes(const ModelSpec& spec) {
  std::vector<InputShape> shapes{spec.input};
  InputShape cur = spec.input;
  const auto need_channels = [&](std::size_t expected, std::size_t stage) {
    if (cur.channels != expected) {
      throw DimensionError("stage " + std::to_string(stage) + " expects " +
                           std::to_string(expected) + " channels, receives " +
                           std::to_string(cur.channels));
    }
  };
  const auto need_filterable = [&](std::size_t stage) {
    if (spec.lfm.padding != PaddingMode::zero && spec.lfm.m > std::min(cur.height, cur.width)) {
      throw DimensionError("stage " + std::to_string(stage) + ": LFM kernel " +
                           std::to_string(spec.lfm.m) + " exceeds feature map " +
                           std::to_string(cur.height) + "x" + std::to_string(cur.width));
    }
  };
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    std::visit(overloaded{
                   [&](const layer::Conv& c) {
                     need_channels(c.c_in, i);
                     if (c.stride == 0 || c.kernel % 2 == 0) {
                       throw StructureError("stage " + std::to_string(i) +
                                            ": conv needs odd kernel and stride >= 1");
                     }
                     cur = {c.c_out, strided_extent(cur.height, c.stride),
                            strided_extent(cur.width, c.stride)};
                   },
                   [&](const layer::Relu&) {},
                   [&](const layer::RslBlock& r) {
                     need_channels(r.c_in, i);
                     need_filterable(i);
                     cur = {r.c_out, strided_extent(cur.height, 2), strided_extent(cur.width, 2)};
                   },
                   [&](const layer::Lfm&) { need_filterable(i); },
                   [&](const layer::GlobalAvgPool&) { cur = {cur.channels, 1, 1}; },
                   [&](const layer::Linear& l) {
                     need_channels(l.d_in, i);
                     cur = {l.d_out, 1, 1};
                   },
               },
               spec.stages[i]);
    shapes.push_back(cur);
  }
  return shapes;
}

void validate(const ModelSpec& spec) {
  spec.lfm.validate();
  if (spec.n_classes == 0) throw StructureError("model needs at least one class");
  if (spec.input.channels == 0 || spec.input.height == 0 || spec.input.width == 0) {
    throw StructureError("model input shape has a zero extent");
  }
  const auto& st = spec.stages;
  std::size_t gap_count = 0, gap_at = 0;
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (std::holds_alternative<layer::GlobalAvgPool>(st[i])) {
      ++gap_count;
      gap_at = i;
    }
  }
  if (gap_count != 1) {
    throw StructureError("model needs exactly one global_avg_pool, found " +
                         std::to_string(gap_count));
  }
  if (gap_at + 2 != st.size() || !std::holds_alternative<layer::Linear>(st.back())) {
    throw StructureError("global_avg_pool must be followed only by the linear classifier");
  }
  if (std::get<layer::Linear>(st.back()).d_out != spec.n_classes) {
    throw StructureError("linear classifier width does not match n_classes");
  }

  bool has_lfm = false, has_rsl = false, has_strided_conv = false;
  for (const auto& l : st) {
    if (std::holds_alternative<layer::Lfm>(l)) has_lfm = true;
    if (std::holds_alternative<layer::RslBlock>(l)) has_rsl = true;
    if (const auto* c = std::get_if<layer::Conv>(&l); c && c->stride == 2) has_strided_conv = true;
  }
  switch (spec.variant) {
    case Variant::baseline:
      if (has_lfm || has_rsl) throw StructureError("baseline model must not contain LFM layers");
      break;
    case Variant::ie:
      if (gap_at == 0 || !std::holds_alternative<layer::Lfm>(st[gap_at - 1])) {
        throw StructureError("IE model needs an lfm layer immediately before global_avg_pool");
      }
      if (has_rsl) throw StructureError("IE model must not contain rsl blocks");
      break;
    case Variant::rsl:
      if (has_strided_conv) throw StructureError("RSL model still contains a stride-2 conv");
      if (!has_rsl) throw StructureError("RSL model contains no rsl block");
      if (has_lfm) throw StructureError("RSL model must not contain a standalone lfm layer");
      break;
  }
  stage_shapes(spec);
}

ModelSpec toy_spec(Variant variant, std::size_t n_classes, InputShape input, LfmConfig lfm) {
  ModelSpec spec;
  spec.variant = Variant::baseline;
  spec.input = input;
  spec.n_classes = n_classes;
  spec.lfm = lfm.with_stride(1);
  spec.stages = {
      layer::Conv{input.channels, 8, 3, 1}, layer::Relu{},
      layer::Conv{8, 16, 3, 2},             layer::Relu{},
      layer::Conv{16, 32, 3, 2},            layer::Relu{},
      layer::GlobalAvgPool{},               layer::Linear{32, n_classes},
  };
  switch (variant) {
    case Variant::baseline: break;
    case Variant::ie: spec = ie_attach(std::move(spec)); break;
    case Variant::rsl: spec = rsl_attach(std::move(spec)); break;
  }
  validate(spec);
  return spec;
}

ModelSpec ie_attach(ModelSpec spec) {
  if (spec.variant == Variant::rsl) {
    throw StructureError("IE cannot be attached to an RSL model");
  }
  auto gap = std::find_if(spec.stages.begin(), spec.stages.end(), [](const Layer& l) {
    return std::holds_alternative<layer::GlobalAvgPool>(l);
  });
  if (gap == spec.stages.end()) {
    throw StructureError("IE needs a global_avg_pool stage to insert before");
  }
  if (gap == spec.stages.begin() || !std::holds_alternative<layer::Lfm>(*(gap - 1))) {
    spec.stages.insert(gap, layer::Lfm{});
  }
  spec.variant = Variant::ie;
  spec.lfm.stride = 1;
  return spec;
}

ModelSpec rsl_attach(ModelSpec spec) {
  if (spec.variant == Variant::ie) {
    throw StructureError("RSL cannot be applied to an IE model");
  }
  bool replaced = false;
  for (auto& l : spec.stages) {
    if (const auto* c = std::get_if<layer::Conv>(&l); c && c->stride == 2) {
      l = layer::RslBlock{c->c_in, c->c_out};
      replaced = true;
    }
  }
  if (!replaced && spec.variant != Variant::rsl) {
    throw StructureError("RSL found no stride-2 convolution to replace");
  }
  spec.variant = Variant::rsl;
  return spec;
}

std::string serialize(const ModelSpec& spec) {
  std::ostringstream os;
  os << "variant=" << to_string(spec.variant) << '\n';
  os << "input=" << spec.input.channels << 'x' << spec.input.height << 'x' << spec.input.width
     << '\n';
  os << "n_classes=" << spec.n_classes << '\n';
  os << "lfm.m=" << spec.lfm.m << '\n';
  os << "lfm.padding=" << to_string(spec.lfm.padding) << '\n';
  os << "lfm.stride=" << spec.lfm.stride << '\n';
  os << "lfm.normalization=" << to_string(spec.lfm.normalization) << '\n';
  for (const auto& l : spec.stages) {
    os << "stage=";
    std::visit(overloaded{
                   [&](const layer::Conv& c) {
                     os << "conv " << c.c_in << ' ' << c.c_out << ' ' << c.kernel << ' ' << c.stride;
                   },
                   [&](const layer::Relu&) { os << "relu"; },
                   [&](const layer::RslBlock& r) { os << "rsl_block " << r.c_in << ' ' << r.c_out; },
                   [&](const layer::Lfm&) { os << "lfm"; },
                   [&](const layer::GlobalAvgPool&) { os << "global_avg_pool"; },
                   [&](const layer::Linear& l) { os << "linear " << l.d_in << ' ' << l.d_out; },
               },
               l);
    os << '\n';
  }
  return os.str();
}

namespace {

std::size_t parse_count(std::string_view s, std::string_view key) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) {
    throw ArgumentError("model spec: bad count '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

std::vector<std::size_t> parse_counts(std::istringstream& is, std::size_t n, std::string_view key) {
  std::vector<std::size_t> out;
  std::string tok;
  while (is >> tok) out.push_back(parse_count(tok, key));
  if (out.size() != n) {
    throw ArgumentError("model spec: " + std::string(key) + " needs " + std::to_string(n) +
                        " numbers");
  }
  return out;
}

}  // namespace

ModelSpec parse_model_spec(std::string_view text) {
  ModelSpec spec;
  std::istringstream lines{std::string(text)};
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ArgumentError("model spec: line without '=': " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "variant") {
      spec.variant = parse_variant(value);
    } else if (key == "input") {
      std::string v = value;
      std::replace(v.begin(), v.end(), 'x', ' ');
      std::istringstream is(v);
      const auto dims = parse_counts(is, 3, key);
      spec.input = {dims[0], dims[1], dims[2]};
    } else if (key == "n_classes") {
      spec.n_classes = parse_count(value, key);
    } else if (key == "lfm.m") {
      spec.lfm.m = parse_count(value, key);
    } else if (key == "lfm.padding") {
      spec.lfm.padding = parse_padding(value);
    } else if (key == "lfm.stride") {
      spec.lfm.stride = parse_count(value, key);
    } else if (key == "lfm.normalization") {
      spec.lfm.normalization = parse_normalization(value);
    } else if (key == "stage") {
      std::istringstream is(value);
      std::string kind;
      is >> kind;
      if (kind == "conv") {
        const auto v = parse_counts(is, 4, kind);
        spec.stages.push_back(layer::Conv{v[0], v[1], v[2], v[3]});
      } else if (kind == "relu") {
        spec.stages.push_back(layer::Relu{});
      } else if (kind == "rsl_block") {
        const auto v = parse_counts(is, 2, kind);
        spec.stages.push_back(layer::RslBlock{v[0], v[1]});
      } else if (kind == "lfm") {
        spec.stages.push_back(layer::Lfm{});
      } else if (kind == "global_avg_pool") {
        spec.stages.push_back(layer::GlobalAvgPool{});
      } else if (kind == "linear") {
        const auto v = parse_counts(is, 2, kind);
        spec.stages.push_back(layer::Linear{v[0], v[1]});
      } else {
        throw ArgumentError("model spec: unknown stage kind '" + kind + "'");
      }
    } else {
      throw ArgumentError("model spec: unknown key '" + key + "'");
    }
  }
  validate(spec);
  return spec;
}

}  // namespace lfm
