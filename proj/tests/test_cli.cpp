#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "multimix/io.hpp"

namespace fs = std::filesystem;
using multimix::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::current_path() / "cli_scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

const char* kTinyConfig =
    "mix_mode = erm\nepochs = 2\nbatch_size = 32\nper_class_train = 30\nper_class_test = 10\n"
    "hidden = 8\nembed_dim = 4\nlr = 0.01\nseed = 5\n";

}  // namespace

TEST_CASE("train writes three artifacts and reruns from its manifest") {
  const auto dir = scratch("train");
  write(dir / "tiny.cfg", kTinyConfig);
  const auto first = invoke({"train", "--config", (dir / "tiny.cfg").string(), "--out", (dir / "a").string()});
  REQUIRE(first.code == 0);
  for (const char* f : {"checkpoint.txt", "metrics.csv", "manifest.txt"}) CHECK(fs::exists(dir / "a" / f));

  const auto second =
      invoke({"train", "--config", (dir / "a" / "manifest.txt").string(), "--out", (dir / "b").string()});
  REQUIRE(second.code == 0);
  CHECK(multimix::io::read_file(dir / "a" / "metrics.csv") == multimix::io::read_file(dir / "b" / "metrics.csv"));

  const auto reseeded =
      invoke({"train", "--config", (dir / "tiny.cfg").string(), "--seed", "6", "--out", (dir / "c").string()});
  REQUIRE(reseeded.code == 0);
  CHECK(multimix::io::read_file(dir / "c" / "manifest.txt").find("seed = 6") != std::string::npos);
}

TEST_CASE("config errors exit 2 and name the key") {
  const auto dir = scratch("badkey");
  write(dir / "bad.cfg", "epochs = 2\nlearnrate = 0.1\n");
  const auto r = invoke({"train", "--config", (dir / "bad.cfg").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("learnrate") != std::string::npos);
  CHECK(r.err.find("line 2") != std::string::npos);
  CHECK(invoke({"train"}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
}

TEST_CASE("a diverging run exits 3") {
  const auto dir = scratch("diverge");
  write(dir / "hot.cfg", std::string(kTinyConfig) + "lr = 1e6\nepochs = 20\n");
  const auto r = invoke({"train", "--config", (dir / "hot.cfg").string(), "--out", (dir / "o").string()});
  CHECK(r.code == 3);
}

TEST_CASE("eval, attack and ood on a trained checkpoint") {
  const auto dir = scratch("evaluate");
  write(dir / "tiny.cfg", kTinyConfig);
  REQUIRE(invoke({"train", "--config", (dir / "tiny.cfg").string(), "--out", (dir / "run").string()}).code == 0);
  const auto ckpt = (dir / "run" / "checkpoint.txt").string();
  const auto cfg = (dir / "tiny.cfg").string();

  const auto ev = invoke({"eval", "--config", cfg, "--checkpoint", ckpt, "--out", (dir / "ev").string()});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("top1_error") != std::string::npos);
  CHECK(ev.out.find("alignment") != std::string::npos);
  CHECK(ev.out.find("uniformity") != std::string::npos);
  CHECK(multimix::io::read_file(dir / "ev" / "embeddings.csv").rfind("example_id,label,e_0", 0) == 0);

  const auto at = invoke({"attack", "--config", cfg, "--checkpoint", ckpt, "--epsilon", "0,0.5", "--out",
                          (dir / "at").string()});
  REQUIRE(at.code == 0);
  const auto report = multimix::io::read_file(dir / "at" / "attack.csv");
  CHECK(report.rfind("epsilon,clean_err,fgsm_err,pgd_err\n", 0) == 0);
  // first data row: epsilon 0, all three columns equal
  const auto row = report.substr(report.find('\n') + 1, report.find('\n', report.find('\n') + 1) - report.find('\n') - 1);
  const auto cells = multimix::io::split(row, ',');
  REQUIRE(cells.size() == 4);
  CHECK(cells[1] == cells[2]);
  CHECK(cells[2] == cells[3]);

  const auto od = invoke({"ood", "--config", cfg, "--checkpoint", ckpt, "--out", (dir / "ood").string()});
  REQUIRE(od.code == 0);
  CHECK(od.out.find("auroc") != std::string::npos);
  CHECK(multimix::io::read_file(dir / "ood" / "ood_manifest.txt").find("ood=1") != std::string::npos);
  CHECK(fs::exists(dir / "ood" / "ood.csv"));

  // input files are untouched
  CHECK(multimix::io::read_file(dir / "tiny.cfg") == kTinyConfig);

  // data from CSV instead of the config
  const auto csv = invoke({"eval", "--checkpoint", ckpt, "--data", (dir / "ood" / "ood.csv").string(), "--out",
                           (dir / "ev2").string()});
  CHECK(csv.code == 0);
}

TEST_CASE("missing checkpoint is an error") {
  const auto dir = scratch("missing");
  write(dir / "tiny.cfg", kTinyConfig);
  const auto r = invoke({"attack", "--config", (dir / "tiny.cfg").string(), "--checkpoint",
                         (dir / "nope.txt").string(), "--out", dir.string()});
  CHECK(r.code != 0);
}

TEST_CASE("sample: hull and segment checks, deterministic under seed") {
  const auto dir = scratch("sample");
  const auto a = invoke({"sample", "--m", "10", "--n", "300", "--seed", "3", "--out", (dir / "a").string()});
  REQUIRE(a.code == 0);
  CHECK(a.out.find("hull_membership 300/300") != std::string::npos);
  CHECK(a.out.find("segment_collinearity 10/10") != std::string::npos);
  const auto b = invoke({"sample", "--m", "10", "--n", "300", "--seed", "3", "--out", (dir / "b").string()});
  REQUIRE(b.code == 0);
  CHECK(multimix::io::read_file(dir / "a" / "samples.csv") == multimix::io::read_file(dir / "b" / "samples.csv"));
  const auto fixed = invoke({"sample", "--alpha-policy", "fixed", "--alpha", "0.2", "--out", (dir / "c").string()});
  CHECK(fixed.code == 0);
  CHECK(invoke({"sample", "--alpha-policy", "fixed", "--alpha", "-1", "--out", (dir / "d").string()}).code == 2);
}

TEST_CASE("gradcheck passes and its negative control fails") {
  const auto ok = invoke({"gradcheck"});
  CHECK(ok.code == 0);
  for (const char* mode : {"erm ", "input ", "manifold ", "multimix ", "dense ", "dense+distil "})
    CHECK(ok.out.find(mode) != std::string::npos);
  CHECK(invoke({"gradcheck", "--corrupt"}).code == 1);
}

TEST_CASE("help exits cleanly") { CHECK(invoke({"--help"}).code == 0); }
