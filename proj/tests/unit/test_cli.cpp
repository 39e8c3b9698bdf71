#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "lfm/error.hpp"
#include "lfm/filters.hpp"
#include "lfm/model.hpp"
#include "lfm/spectral.hpp"
#include "lfm/tensorio.hpp"
#include "lfm_cli/cli.hpp"
#include "test_support.hpp"

using namespace lfm;
using lfm::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome lfm_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> m;
  for (const auto& [k, v] : cli::parse_config_text(text)) m[k] = v;
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// Environment variable set for the lifetime of the guard.
struct EnvGuard {
  std::string name;
  EnvGuard(const std::string& n, const std::string& v) : name(n) { ::setenv(n.c_str(), v.c_str(), 1); }
  ~EnvGuard() { ::unsetenv(name.c_str()); }
};

Image checkerboard(std::size_t n) {
  Image img(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) img(r, c) = (r + c) % 2 ? 0.8 : 0.2;
  return img;
}

// Small dataset shared by the training tests.
const fs::path& tiny_dataset() {
  static TempDir dir("cli_data");
  static bool made = false;
  if (!made) {
    const auto r = lfm_run({"gen-data", "--out", dir.path().string(), "--classes", "2", "--per-class",
                            "5", "--size", "16", "--seed", "3"});
    REQUIRE(r.code == 0);
    made = true;
  }
  return dir.path();
}

}  // namespace

TEST_CASE("config text parsing") {
  const auto kv = cli::parse_config_text("# comment\n\nepochs = 3\nout=\"a b\"\n  lr=0.5  \n");
  REQUIRE(kv.size() == 3);
  CHECK(kv[0] == std::pair<std::string, std::string>{"epochs", "3"});
  CHECK(kv[1].second == "a b");
  CHECK(kv[2] == std::pair<std::string, std::string>{"lr", "0.5"});
  try {
    cli::parse_config_text("a=1\nbroken\n");
    FAIL("no throw");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(cli::parse_config_text("=3\n"), FormatError);
}

TEST_CASE("filter: lowpass + highpass reconstructs the input") {
  TempDir d("cli_filter");
  const Image img = lfm::testing::random_image(16, 16, 5, 0.2, 0.8);
  write_pgm(d.path() / "in.pgm", img);
  const Image q = read_pgm(d.path() / "in.pgm");
  REQUIRE(lfm_run({"filter", "--in", (d.path() / "in.pgm").string(), "--out",
                   (d.path() / "lo.pgm").string()}).code == 0);
  REQUIRE(lfm_run({"filter", "--in", (d.path() / "in.pgm").string(), "--out",
                   (d.path() / "hi.pgm").string(), "--mode", "highpass"}).code == 0);
  const Image lo = read_pgm(d.path() / "lo.pgm");
  const Image hi = read_pgm(d.path() / "hi.pgm");
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(std::abs(lo.pixels()[i] + hi.pixels()[i] - 0.5 - q.pixels()[i]) <= 1.0 / 255 + 1e-12);
  }
  // the written lowpass matches the library call up to quantization
  const Image ref = convolve2d(q, gaussian_kernel(3), PaddingMode::reflect);
  CHECK(lfm::testing::max_abs_diff(lo, ref) <= 0.5 / 255 + 1e-12);
}

TEST_CASE("filter: spatial and spectral paths agree under circular padding") {
  TempDir d("cli_paths");
  write_pgm(d.path() / "in.pgm", lfm::testing::random_image(16, 12, 9));
  const std::string in = (d.path() / "in.pgm").string();
  REQUIRE(lfm_run({"filter", "--in", in, "--out", (d.path() / "a.pgm").string(), "--padding",
                   "circular", "--m", "5"}).code == 0);
  REQUIRE(lfm_run({"filter", "--in", in, "--out", (d.path() / "b.pgm").string(), "--padding",
                   "circular", "--m", "5", "--path", "spectral"}).code == 0);
  CHECK(lfm::testing::max_abs_diff(read_pgm(d.path() / "a.pgm"), read_pgm(d.path() / "b.pgm")) <=
        1.0 / 255 + 1e-12);
}

TEST_CASE("filter: argument errors") {
  TempDir d("cli_ferr");
  write_pgm(d.path() / "in.pgm", Image(8, 8, 0.5));
  const std::string in = (d.path() / "in.pgm").string(), out = (d.path() / "o.pgm").string();
  auto r = lfm_run({"filter", "--in", in, "--out", out, "--m", "1"});
  CHECK(r.code == 1);
  CHECK(r.err.find("lfm: E_ARG:") != std::string::npos);
  r = lfm_run({"filter", "--in", in, "--out", out, "--m", "4"});
  CHECK(r.code == 1);
  r = lfm_run({"filter", "--in", in, "--out", out, "--path", "spectral"});
  CHECK(r.code == 1);
  CHECK(r.err.find("circular") != std::string::npos);
  r = lfm_run({"filter", "--in", in, "--out", out, "--mode", "bandpass"});
  CHECK(r.code == 1);
  r = lfm_run({"filter", "--in", (d.path() / "missing.pgm").string(), "--out", out});
  CHECK(r.code == 1);
  CHECK(r.err.find("lfm: E_IO:") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("filter: clipping is reported") {
  TempDir d("cli_clip");
  write_pgm(d.path() / "in.pgm", checkerboard(8));
  const auto r = lfm_run({"filter", "--in", (d.path() / "in.pgm").string(), "--out",
                          (d.path() / "o.pgm").string(), "--mode", "highpass", "--offset", "0"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("clipped") != std::string::npos);
}

TEST_CASE("spectrum: constant image and checkerboard") {
  TempDir d("cli_spec");
  write_pgm(d.path() / "c.pgm", Image(16, 16, 0.6));
  write_pgm(d.path() / "k.pgm", checkerboard(16));
  auto kv = key_values(lfm_run({"spectrum", "--in", (d.path() / "c.pgm").string()}).out);
  REQUIRE(kv.at("n_bands") == "8");
  const double total_c = std::stod(kv.at("total_energy"));
  CHECK(std::stod(kv.at("band.0.energy")) == doctest::Approx(total_c).epsilon(1e-12));
  for (int b = 1; b < 8; ++b) CHECK(std::stod(kv.at("band." + std::to_string(b) + ".energy")) == 0.0);

  // checkerboard: the DC part sits in band 0, the rest in the outermost band
  kv = key_values(lfm_run({"spectrum", "--in", (d.path() / "k.pgm").string(), "--bands", "4"}).out);
  double sum = 0.0;
  for (int b = 0; b < 4; ++b) sum += std::stod(kv.at("band." + std::to_string(b) + ".energy"));
  CHECK(sum == doctest::Approx(std::stod(kv.at("total_energy"))).epsilon(1e-12));
  CHECK(std::stod(kv.at("band.3.energy")) > 0.0);
  CHECK(std::stod(kv.at("band.1.energy")) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::stod(kv.at("band.2.energy")) == doctest::Approx(0.0).epsilon(1e-12));

  // report to file matches stdout
  REQUIRE(lfm_run({"spectrum", "--in", (d.path() / "c.pgm").string(), "--out",
                   (d.path() / "r.txt").string()}).code == 0);
  CHECK(slurp(d.path() / "r.txt") == lfm_run({"spectrum", "--in", (d.path() / "c.pgm").string()}).out);
}

TEST_CASE("gen-data: counts and determinism") {
  TempDir a("cli_gen_a"), b("cli_gen_b");
  const std::vector<std::string> tail = {"--classes", "3", "--per-class", "25", "--size", "16",
                                         "--seed", "11"};
  auto args = std::vector<std::string>{"gen-data", "--out", a.path().string()};
  args.insert(args.end(), tail.begin(), tail.end());
  const auto r = lfm_run(args);
  REQUIRE(r.code == 0);
  const auto kv = key_values(r.out);
  CHECK(kv.at("images") == "150");
  CHECK(kv.at("A.train") == "60");
  CHECK(kv.at("A.test") == "15");
  CHECK(kv.at("B.train") == "60");
  CHECK(kv.at("B.test") == "15");
  args[2] = b.path().string();
  REQUIRE(lfm_run(args).code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path other = b.path() / fs::relative(e.path(), a.path());
    CHECK(slurp(e.path()) == slurp(other));
  }
  CHECK(files >= 150);
}

TEST_CASE("mmd: identical folders give zero, lowpass shrinks the gap") {
  TempDir d("cli_mmd");
  REQUIRE(lfm_run({"gen-data", "--out", d.path().string(), "--per-class", "10", "--size", "16",
                   "--seed", "4"}).code == 0);
  const std::string a = (d.path() / "A").string(), b = (d.path() / "B").string();
  auto mmd = [&](const std::string& x, const std::string& y, const std::string& pre) {
    const auto r = lfm_run({"mmd", "--domain-a", x, "--domain-b", y, "--preproc", pre});
    REQUIRE(r.code == 0);
    return std::stod(key_values(r.out).at("mmd2"));
  };
  CHECK(mmd(a, a, "none") == 0.0);
  const double raw = mmd(a, b, "none"), low = mmd(a, b, "lowpass"), high = mmd(a, b, "highpass");
  CHECK(raw > 0.01);
  CHECK(low < raw);
  CHECK(high > low);
  const auto r = lfm_run({"mmd", "--domain-a", a, "--domain-b", (d.path() / "none").string()});
  CHECK(r.code == 1);
}

TEST_CASE("train: lr 0 keeps the initial model, equal seeds give identical checkpoints") {
  const fs::path& data = tiny_dataset();
  TempDir d("cli_train");
  const auto train = [&](const std::string& name, const std::vector<std::string>& extra) {
    std::vector<std::string> a = {"train", "--data", data.string(), "--epochs", "2", "--batch-size",
                                  "4", "--out", (d.path() / name).string()};
    a.insert(a.end(), extra.begin(), extra.end());
    if (std::find(extra.begin(), extra.end(), "--seed") == extra.end()) {
      a.insert(a.end(), {"--seed", "5"});
    }
    const auto r = lfm_run(a);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return r;
  };
  const auto r1 = train("a.ckpt", {});
  train("b.ckpt", {});
  CHECK(slurp(d.path() / "a.ckpt") == slurp(d.path() / "b.ckpt"));
  CHECK(slurp(d.path() / "a.ckpt.log") == r1.out);
  CHECK(std::count(r1.out.begin(), r1.out.end(), '\n') == 2);
  CHECK(key_values(slurp(d.path() / "a.ckpt.config")).at("seed") == "5");

  train("z.ckpt", {"--lr", "0"});
  const Model initial =
      build_model(toy_spec(Variant::baseline, 2, {1, 16, 16}, LfmConfig{}), 5);
  const auto bytes = encode_checkpoint(initial);
  CHECK(slurp(d.path() / "z.ckpt") == std::string(bytes.begin(), bytes.end()));

  train("c.ckpt", {"--seed", "6"});
  CHECK(slurp(d.path() / "a.ckpt") != slurp(d.path() / "c.ckpt"));

  const auto e = lfm_run({"eval", "--data", data.string(), "--model", (d.path() / "a.ckpt").string(),
                          "--domain", "A", "--split", "train"});
  REQUIRE(e.code == 0);
  const auto kv = key_values(e.out);
  CHECK(kv.at("n") == "8");  // 2 classes x 4 training images
  CHECK(kv.count("class.1") == 1);
  const double acc = std::stod(kv.at("accuracy"));
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("config precedence: flag > config file > LFM_SEED > built-in") {
  const fs::path& data = tiny_dataset();
  TempDir d("cli_cfg");
  write(d.path() / "run.cfg", "# run\nepochs=1\nseed=9\nbatch-size=4\n");
  const std::string ckpt = (d.path() / "m.ckpt").string();
  const auto seed_of = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = {"train", "--data", data.string(), "--epochs", "1", "--out", ckpt};
    a.insert(a.end(), extra.begin(), extra.end());
    const auto r = lfm_run(a);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.err.find("config train.epochs=1") != std::string::npos);
    return key_values(slurp(ckpt + ".config")).at("seed");
  };
  CHECK(seed_of({}) == "1");
  {
    EnvGuard env("LFM_SEED", "42");
    CHECK(seed_of({}) == "42");
    CHECK(seed_of({"--config", (d.path() / "run.cfg").string()}) == "9");
    CHECK(seed_of({"--config", (d.path() / "run.cfg").string(), "--seed", "13"}) == "13");
  }
  CHECK(key_values(slurp(ckpt + ".config")).at("batch-size") == "4");

  write(d.path() / "bad.cfg", "epochs=1\ncolour=blue\n");
  auto r = lfm_run({"train", "--data", data.string(), "--out", ckpt, "--config",
                    (d.path() / "bad.cfg").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("lfm: E_ARG:") != std::string::npos);
  CHECK(r.err.find("colour") != std::string::npos);

  write(d.path() / "garbled.cfg", "epochs\n");
  r = lfm_run({"train", "--data", data.string(), "--out", ckpt, "--config",
               (d.path() / "garbled.cfg").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("lfm: E_FORMAT:") != std::string::npos);

  EnvGuard env("LFM_SEED", "abc");
  r = lfm_run({"train", "--data", data.string(), "--out", ckpt});
  CHECK(r.code == 1);
  CHECK(r.err.find("LFM_SEED") != std::string::npos);
}

TEST_CASE("parse errors, help and exit codes") {
  auto r = lfm_run({});
  CHECK(r.code == 2);
  r = lfm_run({"frobnicate"});
  CHECK(r.code == 2);
  r = lfm_run({"filter", "--in", "x.pgm"});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("lfm: E_ARG:", 0) == 0);
  r = lfm_run({"train", "--data", "d", "--out", "o", "--epochs", "many"});
  CHECK(r.code == 2);
  r = lfm_run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("ablation") != std::string::npos);
  r = lfm_run({"train", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--arch") != std::string::npos);
}

TEST_CASE("ablation: five arms in order, records per run") {
  const fs::path& data = tiny_dataset();
  TempDir d("cli_abl");
  const std::string table = (d.path() / "t.txt").string();
  const auto r = lfm_run({"ablation", "--data", data.string(), "--epochs", "1", "--batch-size", "8",
                          "--seeds", "1,2", "--out", table});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream in(slurp(table));
  std::string line;
  std::vector<std::string> arms;
  std::getline(in, line);
  CHECK(line.rfind("arm", 0) == 0);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string name, arch, pre;
    int runs = 0;
    ls >> name >> arch >> pre >> runs;
    arms.push_back(name + "/" + arch + "/" + pre);
    CHECK(runs == 2);
  }
  CHECK(arms == std::vector<std::string>{"baseline/baseline/none", "highpass/baseline/highpass",
                                         "lowpass/baseline/lowpass", "ie/ie/none", "rsl/rsl/none"});
  CHECK(r.out == slurp(table));
  const std::string rec = slurp(table + ".records");
  std::size_t runs = 0, pos = 0;
  while ((pos = rec.find("record=run ", pos)) != std::string::npos) ++runs, ++pos;
  CHECK(runs == 10);
  std::size_t logged = 0;
  pos = 0;
  while ((pos = r.err.find("run arm=", pos)) != std::string::npos) ++logged, ++pos;
  CHECK(logged == 10);
  CHECK(lfm_run({"ablation", "--data", data.string(), "--seeds", "1,x", "--out", table}).code == 1);
}

#ifdef LFM_CLI_PATH
TEST_CASE("installed binary: exit codes and streams") {
  TempDir d("cli_bin");
  const std::string bin = LFM_CLI_PATH;
  const auto status = [](const std::string& cmd) {
    const int s = std::system(cmd.c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  const std::string out = (d.path() / "stdout").string(), err = (d.path() / "stderr").string();
  CHECK(status(bin + " --help > " + out) == 0);
  CHECK(slurp(out).find("gen-data") != std::string::npos);
  CHECK(status(bin + " nope 2> " + err) == 2);
  CHECK(status(bin + " filter --in " + (d.path() / "none.pgm").string() + " --out " +
                (d.path() / "o.pgm").string() + " 2> " + err) == 1);
  CHECK(slurp(err).find("lfm: E_IO:") != std::string::npos);
  write_pgm(d.path() / "c.pgm", Image(8, 8, 0.25));
  CHECK(status(bin + " spectrum --in " + (d.path() / "c.pgm").string() + " > " + out + " 2> " + err) == 0);
  CHECK(slurp(out).find("total_energy=") == 0);
  CHECK(slurp(err).find("config spectrum.bands=8") != std::string::npos);
}
#endif
