#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rebar2bim/cli.hpp"
#include "rebar2bim/ifc.hpp"
#include "rebar2bim/io.hpp"
#include "rebar2bim/synth_oracle.hpp"
#include "support.hpp"

using namespace rebar2bim;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One synthesized case1 dataset shared by the tests below.
const fs::path& dataset() {
  static testing::TempDir dir("cli_data");
  static const bool made = [] {
    const Run r = cli({"--seed", "7", "synth", "--case", "case1", "--out", dir.path().string()});
    REQUIRE(r.code == 0);
    return true;
  }();
  (void)made;
  return dir.path();
}

}  // namespace

TEST_CASE("synth writes a complete dataset") {
  testing::TempDir out("cli_synth");
  const Run r = cli({"--seed", "7", "synth", "--case", "case1", "--out", out.path().string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("synthesized case1 (seed 7): 3 elements, 6 scans, 3 labeled images") != std::string::npos);
  CHECK(list_scan_bundles(out / "scans").size() == 6);
  int images = 0;
  for (const auto& e : fs::directory_iterator(out / "images")) images += e.path().extension() == ".pgm";
  CHECK(images == 3);
  for (const char* f : {"scene.json", "cameras.json", "ground_truth.json"}) CHECK(fs::exists(out / f));
}

TEST_CASE("usage and I/O failures exit 2") {
  testing::TempDir out("cli_usage");
  CHECK(cli({}).code == 2);
  CHECK(cli({"synth", "--case", "case3", "--out", out.path().string()}).code == 2);
  CHECK(cli({"synth", "--case", "case1"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  // A regular file where a directory is needed.
  { std::ofstream(out / "blocker") << "x"; }
  const Run r = cli({"synth", "--case", "case1", "--out", (out / "blocker" / "sub").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("E_IO") != std::string::npos);
  CHECK(cli({"pipeline", "--data", (out / "missing").string(), "--out", (out / "o").string()}).code == 2);
}

TEST_CASE("help exits 0 from the installed binary") {
  const std::string cmd = std::string("\"") + REBAR2BIM_EXE + "\" --help > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
}

TEST_CASE("pipeline places every planted bar") {
  testing::TempDir out("cli_pipe");
  const Run r = cli({"pipeline", "--data", dataset().string(), "--out", out.path().string()});
  CHECK(r.code == 0);
  const auto truth = truth_from_json(slurp(dataset() / "ground_truth.json"));
  CHECK(r.out.find("placed " + std::to_string(truth.size()) + " bars in 3 elements (0 warning(s))") !=
        std::string::npos);
  const IfcCensus c = verify_ifc(slurp(out / "model.ifc"));
  CHECK(c.count("IFCREINFORCINGBAR") == static_cast<int>(truth.size()));
  CHECK(fs::exists(out / "report.json"));
}

TEST_CASE("a missing scan fails the link stage") {
  testing::TempDir data("cli_missing");
  fs::copy(dataset(), data.path(), fs::copy_options::recursive);
  const auto bundles = list_scan_bundles(data / "scans");
  REQUIRE(bundles.size() == 6);
  // The second bundle is the first element's D2 pass.
  const std::string stem = bundles[1].filename().string();
  fs::remove(bundles[1]);
  fs::remove(data / "scans" / (stem.substr(0, stem.size() - 5) + ".csv"));
  const Run r = cli({"pipeline", "--data", data.path().string(), "--out", (data / "out").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("E_MISSING_DIRECTION") != std::string::npos);
  CHECK(r.err.find("link stage") != std::string::npos);
}

TEST_CASE("staged commands reproduce the pipeline byte for byte") {
  testing::TempDir w("cli_staged");
  const std::string data = dataset().string();
  REQUIRE(cli({"pipeline", "--data", data, "--out", (w / "pipe").string()}).code == 0);
  REQUIRE(cli({"detect", "--data", data, "--out", (w / "detections.json").string()}).code == 0);
  REQUIRE(cli({"link", "--data", data, "--detections", (w / "detections.json").string(), "--out",
               (w / "links.json").string()})
              .code == 0);
  REQUIRE(cli({"localize", "--data", data, "--out", (w / "picks.json").string()}).code == 0);
  REQUIRE(cli({"build", "--data", data, "--links", (w / "links.json").string(), "--picks",
               (w / "picks.json").string(), "--out", (w / "staged").string()})
              .code == 0);
  CHECK(slurp(w / "staged" / "model.ifc") == slurp(w / "pipe" / "model.ifc"));
  CHECK(slurp(w / "staged" / "report.json") == slurp(w / "pipe" / "report.json"));

  // The same detections fed back in as external detections.
  REQUIRE(cli({"--external-detections", (w / "detections.json").string(), "pipeline", "--data", data, "--out",
               (w / "ext").string()})
              .code == 0);
  CHECK(slurp(w / "ext" / "model.ifc") == slurp(w / "pipe" / "model.ifc"));
}

TEST_CASE("bad option values") {
  testing::TempDir out("cli_opts");
  const std::string data = dataset().string();
  CHECK(cli({"--threshold", "0", "localize", "--data", data, "--out", (out / "p.json").string()}).code == 2);
  CHECK(cli({"--depth-datum", "bottom", "pipeline", "--data", data, "--out", out.path().string()}).code == 2);
  CHECK(cli({"--max-gap-ms", "0", "pipeline", "--data", data, "--out", out.path().string()}).code != 0);
}
