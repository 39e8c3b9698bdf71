#include "lfm_cli/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "lfm/discrepancy.hpp"
#include "lfm/error.hpp"
#include "lfm/experiment.hpp"
#include "lfm/filters.hpp"
#include "lfm/spectral.hpp"
#include "lfm/synthdata.hpp"
#include "lfm/tensorio.hpp"
#include "lfm/train.hpp"

namespace lfm::cli {

namespace fs = std::filesystem;

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t offset = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    const std::size_t at = offset;
    offset += line.size() + 1;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) throw FormatError("config line is not key=value: " + t, at);
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    out.emplace_back(trim(t.substr(0, eq)), value);
  }
  return out;
}

namespace {

// Options shared by the filter-based commands.
struct FilterFlags {
  std::size_t m = 3;
  std::string padding = "reflect";
  std::string normalization = "unit_sum";
};

struct Context {
  std::ostream& out;
  std::ostream& err;
};

using Action = std::function<void(Context&)>;

void add_filter_flags(CLI::App* sub, FilterFlags& f) {
  sub->add_option("--m", f.m, "Gaussian kernel size (odd, >= 3)")->capture_default_str();
  sub->add_option("--padding", f.padding, "zero | reflect | circular")->capture_default_str();
  sub->add_option("--normalization", f.normalization, "unit_sum | unnormalized_eq2")
      ->capture_default_str();
}

void add_seed_flag(CLI::App* sub, std::uint64_t& seed, const char* help) {
  sub->add_option("--seed", seed, std::string(help) + " (falls back to $LFM_SEED)")
      ->capture_default_str();
}

std::string read_text(const fs::path& p) {
  const auto bytes = read_file(p);
  return {bytes.begin(), bytes.end()};
}

// Long option name without dashes, the key used in config files.
std::string key_of(const CLI::Option* opt) {
  std::string name = opt->get_name();
  while (!name.empty() && name.front() == '-') name.erase(0, 1);
  return name;
}

CLI::Option* find_keyed(CLI::App* sub, const std::string& key) {
  for (CLI::Option* opt : sub->get_options()) {
    if (key_of(opt) == key && key != "help" && key != "config") return opt;
  }
  return nullptr;
}

// The resolved value of every option of `sub`, as config-file lines.
std::string resolved_config(CLI::App* sub) {
  std::ostringstream os;
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string key = key_of(opt);
    if (key == "help" || key == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      for (std::size_t i = 0; i < r.size(); ++i) value += (i ? "," : "") + r[i];
    } else {
      value = opt->get_default_str();
    }
    os << key << '=' << value << '\n';
  }
  return os.str();
}

// Looks ahead in argv for `--config <path>` or `--config=<path>`.
std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

// Defaults come from: built-in < $LFM_SEED < config file. Flags, parsed
// afterwards, override all of them.
void apply_defaults(CLI::App* sub, const std::vector<std::string>& args) {
  if (const char* env = std::getenv("LFM_SEED"); env && *env) {
    if (CLI::Option* seed = find_keyed(sub, "seed")) {
      try {
        seed->default_val(std::string(env));
      } catch (const CLI::Error&) {
        throw ArgumentError("LFM_SEED='" + std::string(env) + "' is not a valid seed");
      }
    }
  }
  const auto path = find_config_path(args);
  if (!path) return;
  for (const auto& [key, value] : parse_config_text(read_text(*path))) {
    CLI::Option* opt = find_keyed(sub, key);
    if (!opt) throw ArgumentError("unknown config key '" + key + "' in " + *path);
    try {
      opt->default_val(value);
    } catch (const CLI::Error& e) {
      throw ArgumentError("config key '" + key + "': " + e.what());
    }
  }
}

Image load_image(const std::string& path) { return read_pgm(path); }

void write_report(Context& ctx, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    ctx.out << text;
  } else {
    write_text_atomic(path, text);
  }
}

// ---- commands -------------------------------------------------------------

Action add_filter(CLI::App& app) {
  auto* sub = app.add_subcommand("filter", "Gaussian low-/high-pass filter a PGM image");
  struct Flags {
    std::string in, out, mode = "lowpass", path = "spatial", offset = "auto";
    FilterFlags f;
  };
  auto fl = std::make_shared<Flags>();
  sub->add_option("--in", fl->in, "input PGM")->required();
  sub->add_option("--out", fl->out, "output PGM")->required();
  sub->add_option("--mode", fl->mode, "lowpass | highpass")->capture_default_str();
  add_filter_flags(sub, fl->f);
  sub->add_option("--path", fl->path, "spatial | spectral")->capture_default_str();
  sub->add_option("--offset", fl->offset,
                  "added before writing; auto = 0.5 for highpass (signed output), 0 for lowpass")
      ->capture_default_str();
  return [fl](Context& ctx) {
    const PaddingMode padding = parse_padding(fl->f.padding);
    const Normalization norm = parse_normalization(fl->f.normalization);
    if (fl->mode != "lowpass" && fl->mode != "highpass") {
      throw ArgumentError("--mode must be lowpass or highpass, got '" + fl->mode + "'");
    }
    const Kernel k = gaussian_kernel(fl->f.m, norm);
    const Image img = load_image(fl->in);
    Image low;
    if (fl->path == "spectral") {
      if (padding != PaddingMode::circular) {
        throw ArgumentError(
            "--path spectral computes a circular convolution; it requires --padding circular");
      }
      if (k.m() > std::min(img.height(), img.width())) {
        throw DimensionError("kernel size exceeds the image");
      }
      low = filter_spectral(img, k);
    } else if (fl->path == "spatial") {
      low = convolve2d(img, k, padding);
    } else {
      throw ArgumentError("--path must be spatial or spectral, got '" + fl->path + "'");
    }
    double offset = fl->mode == "highpass" ? 0.5 : 0.0;
    if (fl->offset != "auto") {
      try {
        std::size_t used = 0;
        offset = std::stod(fl->offset, &used);
        if (used != fl->offset.size()) throw std::invalid_argument(fl->offset);
      } catch (const std::exception&) {
        throw ArgumentError("--offset must be a number or 'auto', got '" + fl->offset + "'");
      }
    }
    Image result = low;
    if (fl->mode == "highpass") {
      for (std::size_t i = 0; i < result.size(); ++i) result.pixels()[i] = img.pixels()[i] - low.pixels()[i];
    }
    std::size_t clipped = 0;
    for (double& v : result.pixels()) {
      v += offset;
      if (v < 0.0 || v > 1.0) ++clipped;
    }
    if (clipped) ctx.err << "lfm: warning: " << clipped << " pixels clipped to [0, 1]\n";
    write_pgm(fl->out, result);
  };
}

Action add_spectrum(CLI::App& app) {
  auto* sub = app.add_subcommand("spectrum", "Radial band energies of a PGM image");
  struct Flags {
    std::string in, out;
    std::size_t bands = 8;
  };
  auto fl = std::make_shared<Flags>();
  sub->add_option("--in", fl->in, "input PGM")->required();
  sub->add_option("--bands", fl->bands, "number of radial bands")->capture_default_str();
  sub->add_option("--out", fl->out, "report path (stdout when empty)")->capture_default_str();
  return [fl](Context& ctx) {
    const SpectrumStats s = spectrum_stats(dft2(load_image(fl->in)), fl->bands);
    write_report(ctx, fl->out, s.to_key_value());
  };
}

Action add_gen_data(CLI::App& app) {
  auto* sub = app.add_subcommand("gen-data", "Generate the two-domain synthetic dataset");
  struct Flags {
    std::string out;
    GenConfig cfg;
    std::string texture = "checkerboard";
  };
  auto fl = std::make_shared<Flags>();
  sub->add_option("--out", fl->out, "output directory")->required();
  sub->add_option("--classes", fl->cfg.n_classes, "number of classes (2..4)")->capture_default_str();
  sub->add_option("--per-class", fl->cfg.n_per_class_per_domain, "images per class and domain")
      ->capture_default_str();
  sub->add_option("--texture", fl->texture, "checkerboard | bandlimited_noise")->capture_default_str();
  sub->add_option("--amplitude", fl->cfg.texture_amplitude, "domain-B texture amplitude")
      ->capture_default_str();
  sub->add_option("--illumination", fl->cfg.illumination_gradient, "illumination ramp amplitude")
      ->capture_default_str();
  sub->add_option("--size", fl->cfg.image_size, "image side length")->capture_default_str();
  add_seed_flag(sub, fl->cfg.seed, "generator seed");
  return [fl](Context& ctx) {
    fl->cfg.texture_kind = parse_texture_kind(fl->texture);
    const DatasetManifest m = gen_dataset(fl->cfg, fl->out);
    ctx.out << "root=" << fl->out << '\n' << "images=" << m.records.size() << '\n';
    for (Domain d : {Domain::A, Domain::B}) {
      for (Split s : {Split::train, Split::test}) {
        ctx.out << to_string(d) << '.' << to_string(s) << '=' << m.count(d, s) << '\n';
      }
    }
  };
}

Action add_mmd(CLI::App& app) {
  auto* sub = app.add_subcommand("mmd", "Domain gap between two image folders");
  struct Flags {
    std::string a, b, preproc = "none", model, out;
    FilterFlags f;
  };
  auto fl = std::make_shared<Flags>();
  sub->add_option("--domain-a", fl->a, "folder of PGM images")->required();
  sub->add_option("--domain-b", fl->b, "folder of PGM images")->required();
  sub->add_option("--preproc", fl->preproc, "none | lowpass | highpass")->capture_default_str();
  add_filter_flags(sub, fl->f);
  sub->add_option("--model", fl->model, "checkpoint; embed with its pooled features")
      ->capture_default_str();
  sub->add_option("--out", fl->out, "report path (stdout when empty)")->capture_default_str();
  return [fl](Context& ctx) {
    Preproc p;
    p.kind = parse_preproc(fl->preproc);
    p.m = fl->f.m;
    p.padding = parse_padding(fl->f.padding);
    if (parse_normalization(fl->f.normalization) != Normalization::unit_sum && p.kind != PreprocKind::none) {
      throw ArgumentError("pre-processing filters use unit_sum normalization");
    }
    const auto a = load_images_recursive(fl->a);
    const auto b = load_images_recursive(fl->b);
    if (a.empty() || b.empty()) throw ArgumentError("both domain folders must contain .pgm files");
    std::optional<Model> model;
    if (!fl->model.empty()) model = read_checkpoint(fl->model);
    const MmdReport r =
        domain_gap(a, b, p, model ? Embedding::model_features(*model) : Embedding::flatten_pixels());
    write_report(ctx, fl->out, r.to_key_value());
  };
}

struct TrainFlags {
  std::string data, preproc = "none", precision = "double";
  FilterFlags f;
  TrainConfig train;
};

void add_train_flags(CLI::App* sub, TrainFlags& t) {
  sub->add_option("--data", t.data, "dataset directory from gen-data")->required();
  add_filter_flags(sub, t.f);
  sub->add_option("--epochs", t.train.epochs, "training epochs")->capture_default_str();
  sub->add_option("--batch-size", t.train.batch_size, "mini-batch size")->capture_default_str();
  sub->add_option("--lr", t.train.learning_rate, "SGD learning rate")->capture_default_str();
  sub->add_option("--momentum", t.train.momentum, "SGD momentum")->capture_default_str();
  sub->add_option("--precision", t.precision, "double | single")->capture_default_str();
}

LfmConfig lfm_config(const FilterFlags& f) {
  LfmConfig c;
  c.m = f.m;
  c.padding = parse_padding(f.padding);
  c.normalization = parse_normalization(f.normalization);
  c.validate();
  return c;
}

Preproc preproc_of(const std::string& kind, const FilterFlags& f) {
  Preproc p;
  p.kind = parse_preproc(kind);
  p.m = f.m;
  p.padding = parse_padding(f.padding);
  return p;
}

struct Splits {
  LabeledImages source_train;
  LabeledImages target_test;
  std::size_t n_classes = 0;
  InputShape input;
};

Splits load_experiment_data(const std::string& dir) {
  const DatasetManifest m = read_manifest(dir);
  Splits s;
  s.source_train = load_split(m, Domain::A, Split::train);
  s.target_test = load_split(m, Domain::B, Split::test);
  if (s.source_train.empty()) throw ArgumentError("dataset has no A/train images");
  std::size_t k = 0;
  for (const auto& r : m.records) k = std::max(k, r.class_id + 1);
  s.n_classes = k;
  const Image& first = s.source_train.images.front();
  s.input = {1, first.height(), first.width()};
  return s;
}

Action add_train(CLI::App& app) {
  auto* sub = app.add_subcommand("train", "Train on A/train, log B/test accuracy");
  struct Flags {
    TrainFlags t;
    std::string arch = "baseline", out, log;
  };
  auto fl = std::make_shared<Flags>();
  add_train_flags(sub, fl->t);
  sub->add_option("--arch", fl->arch, "baseline | ie | rsl")->capture_default_str();
  sub->add_option("--preproc", fl->t.preproc, "none | lowpass | highpass")->capture_default_str();
  add_seed_flag(sub, fl->t.train.seed, "model and shuffle seed");
  sub->add_option("--out", fl->out, "checkpoint path")->required();
  sub->add_option("--log", fl->log, "per-epoch log (default <out>.log)")->capture_default_str();
  return [fl, sub](Context& ctx) {
    TrainConfig cfg = fl->t.train;
    cfg.precision = parse_precision(fl->t.precision);
    cfg.preproc = preproc_of(fl->t.preproc, fl->t.f);
    cfg.validate();
    const Splits data = load_experiment_data(fl->t.data);
    const ModelSpec spec = toy_spec(parse_variant(fl->arch), data.n_classes, data.input,
                                    lfm_config(fl->t.f));
    const std::string log_path = fl->log.empty() ? fl->out + ".log" : fl->log;
    std::string log_text;
    const TrainResult r = train_source(build_model(spec, cfg.seed), data.source_train, cfg,
                                       &data.target_test, [&](const EpochRecord& rec) {
                                         ctx.out << rec.to_line() << '\n';
                                         log_text += rec.to_line() + '\n';
                                       });
    write_checkpoint(fl->out, r.model);
    write_text_atomic(log_path, log_text);
    write_text_atomic(fl->out + ".config", resolved_config(sub));
  };
}

Action add_eval(CLI::App& app) {
  auto* sub = app.add_subcommand("eval", "Top-1 accuracy of a checkpoint on one split");
  struct Flags {
    std::string data, model, domain = "B", split = "test", preproc = "none", precision = "double";
    FilterFlags f;
  };
  auto fl = std::make_shared<Flags>();
  sub->add_option("--data", fl->data, "dataset directory")->required();
  sub->add_option("--model", fl->model, "checkpoint")->required();
  sub->add_option("--domain", fl->domain, "A | B")->capture_default_str();
  sub->add_option("--split", fl->split, "train | test")->capture_default_str();
  sub->add_option("--preproc", fl->preproc, "must match training: none | lowpass | highpass")
      ->capture_default_str();
  add_filter_flags(sub, fl->f);
  sub->add_option("--precision", fl->precision, "double | single")->capture_default_str();
  return [fl](Context& ctx) {
    const Model m = read_checkpoint(fl->model);
    const LabeledImages d =
        load_split(read_manifest(fl->data), parse_domain(fl->domain), parse_split(fl->split));
    const EvalResult r = evaluate(m, d, preproc_of(fl->preproc, fl->f), parse_precision(fl->precision));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", r.accuracy);
    ctx.out << "accuracy=" << buf << '\n' << "n=" << d.size() << '\n';
    for (std::size_t k = 0; k < r.per_class.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.6f", r.per_class[k]);
      ctx.out << "class." << k << '=' << buf << '\n';
    }
  };
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ArgumentError("bad seed '" + tok + "' in --seeds");
    }
  }
  if (out.empty()) throw ArgumentError("--seeds is empty");
  return out;
}

Action add_ablation(CLI::App& app) {
  auto* sub = app.add_subcommand("ablation", "Five-arm strategy grid over seeds");
  struct Flags {
    TrainFlags t;
    std::string seeds = "1,2,3,4,5", out;
  };
  auto fl = std::make_shared<Flags>();
  add_train_flags(sub, fl->t);
  sub->add_option("--seeds", fl->seeds, "comma-separated seeds")->capture_default_str();
  sub->add_option("--out", fl->out, "table path; records go to <out>.records")->required();
  return [fl, sub](Context& ctx) {
    AblationConfig cfg;
    cfg.train = fl->t.train;
    cfg.train.precision = parse_precision(fl->t.precision);
    cfg.train.preproc = preproc_of("none", fl->t.f);
    cfg.train.validate();
    cfg.lfm = lfm_config(fl->t.f);
    cfg.seeds = parse_seed_list(fl->seeds);
    const Splits data = load_experiment_data(fl->t.data);
    const AblationTable t = run_ablation(
        data.source_train, data.target_test, data.n_classes, data.input, cfg,
        [&](const AblationArm& arm, std::uint64_t seed, const TrainResult& r) {
          ctx.err << "run arm=" << arm.name << " seed=" << seed << ' ' << r.log.back().to_line()
                  << '\n';
        });
    write_text_atomic(fl->out, t.to_text());
    write_text_atomic(fl->out + ".records", t.to_records());
    write_text_atomic(fl->out + ".config", resolved_config(sub));
    ctx.out << t.to_text();
  };
}

void report(std::ostream& err, std::string_view tag, const std::string& msg) {
  err << "lfm: " << tag << ": " << msg << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-frequency module toolkit", "lfm"};
  app.require_subcommand(1);
  std::map<std::string, Action> actions;
  actions["filter"] = add_filter(app);
  actions["spectrum"] = add_spectrum(app);
  actions["gen-data"] = add_gen_data(app);
  actions["mmd"] = add_mmd(app);
  actions["train"] = add_train(app);
  actions["eval"] = add_eval(app);
  actions["ablation"] = add_ablation(app);
  std::string config_path;
  for (CLI::App* sub : app.get_subcommands({})) {
    sub->add_option("--config", config_path, "key=value file; flags override its values");
  }

  Context ctx{out, err};
  try {
    // defaults first, so the command line overrides them during parsing
    if (!args.empty()) {
      if (CLI::App* sub = app.get_subcommand_no_throw(args.front())) apply_defaults(sub, args);
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
      app.parse(rev);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      for (CLI::App* sub : app.get_subcommands()) out << sub->help();
      return 0;
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return 0;
      }
      report(err, code_tag(ErrorCode::argument), e.what());
      return 2;
    }
    CLI::App* sub = app.get_subcommands().front();
    for (const auto& line : parse_config_text(resolved_config(sub))) {
      err << "config " << sub->get_name() << '.' << line.first << '=' << line.second << '\n';
    }
    actions.at(sub->get_name())(ctx);
    return 0;
  } catch (const Error& e) {
    report(err, code_tag(e.code()), e.what());
  } catch (const CLI::Error& e) {
    report(err, code_tag(ErrorCode::argument), e.what());
  } catch (const std::exception& e) {
    report(err, "E_INTERNAL", e.what());
  }
  return 1;
}

}  // namespace lfm::cli
