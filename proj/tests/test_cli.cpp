#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrshape/cli.hpp"
#include "qrshape/dataset.hpp"
#include "support.hpp"

using namespace qrshape;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kFixture = std::string(QRSHAPE_DATA_DIR) + "/two_groups.csv";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "qrshape");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_temp(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("qrshape_cli_" + name);
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"fit", kFixture, "--model", "cauchy"}).code == 2);
  CHECK(run({"fit"}).code == 2);
}

TEST_CASE("input errors exit with status 2") {
  const Run missing = run({"extract", "/nonexistent/file.csv"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("cannot open") != std::string::npos);

  const fs::path bad = write_temp("bad.csv", "3,2\na,A,0,0,1,0,0,1\nb,A,0,0,1,zero,0,1\n");
  const Run malformed = run({"extract", bad.string()});
  CHECK(malformed.code == 2);
  CHECK(malformed.err.find("line 3") != std::string::npos);

  const fs::path degenerate = write_temp("degenerate.csv", "3,2\nflat,A,0,0,1,1,2,2\n");
  const Run flat = run({"extract", degenerate.string()});
  CHECK(flat.code == 2);
  CHECK(flat.err.find("flat") != std::string::npos);

  CHECK(run({"fit", kFixture, "--group", "nobody"}).code == 2);
  CHECK(run({"test-meanshape", kFixture, "--groups", "A"}).code == 2);
}

TEST_CASE("extract") {
  const Run r = run({"extract", kFixture});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string header;
  std::getline(lines, header);
  CHECK(header.rfind("id,group,r,w1,", 0) == 0);
  int rows = 0;
  for (std::string l; std::getline(lines, l);) ++rows;
  CHECK(rows == 80);

  const fs::path out = fs::temp_directory_path() / "qrshape_cli_shapes.csv";
  CHECK(run({"extract", kFixture, "--mode", "noreflect", "-o", out.string()}).code == 0);
  CHECK(fs::file_size(out) > 0);
  const fs::path theta = write_temp("theta.csv", "2,0.3\n0.3,1\n");
  CHECK(run({"extract", kFixture, "--theta", theta.string()}).code == 0);
}

TEST_CASE("fit writes versioned JSON") {
  const Run r = run({"fit", kFixture, "--group", "A", "--model", "gaussian", "--restarts", "1"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["schema_version"] == 1);
  CHECK(j["command"] == "fit");
  const auto& f = j["fit"];
  CHECK(f["n"] == 40);
  CHECK(f["n_p"] == 9);
  CHECK(f["converged"] == true);
  const double bic = f["bic_star"], ll = f["loglik"];
  CHECK(bic == doctest::Approx(-2 * ll + 9 * (std::log(42.0) - std::log(24.0))));
  CHECK(f["mu"].size() == 4);
  CHECK(f["series"]["nonconverged_terms"] == 0);

  const Run again = run({"fit", kFixture, "--group", "A", "--model", "gaussian", "--restarts", "1", "--serial"});
  CHECK(json::parse(again.out)["fit"]["loglik"] == f["loglik"]);
}

TEST_CASE("compare") {
  const Run r = run({"compare", kFixture, "--group", "B", "--restarts", "1"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  REQUIRE(j["models"].size() == 3);
  CHECK(j["models"][0]["delta_bic_star"] == 0.0);
  for (std::size_t i = 1; i < 3; ++i)
    CHECK(j["models"][i]["bic_star"].get<double>() >= j["models"][i - 1]["bic_star"].get<double>());

  const Run text = run({"compare", kFixture, "--group", "B", "--restarts", "1", "--models", "gaussian,kotz2", "--format", "text"});
  CHECK(text.code == 0);
  CHECK(text.out.find("kotz2") != std::string::npos);
  CHECK(text.out.find("kotz3") == std::string::npos);
}

TEST_CASE("test-meanshape") {
  const Run r = run({"test-meanshape", kFixture, "--groups", "A,B", "--restarts", "1"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["df"] == 8);
  CHECK(j["statistic"].get<double>() >= -1e-6);
  CHECK(j["null_variance"] == "per-group");
  const double p = j["p_value"];
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
  const Run pooled = run({"test-meanshape", kFixture, "--groups", "A,B", "--restarts", "1", "--pooled-variance"});
  CHECK(json::parse(pooled.out)["null_variance"] == "pooled");
}

TEST_CASE("verify") {
  const Run r = run({"verify", "--suite", "invariance", "--format", "text"});
  CHECK(r.code == 0);
  CHECK(r.out.find("invariance: PASS") != std::string::npos);
  const Run j = run({"verify", "--suite", "zonal"});
  CHECK(j.code == 0);
  CHECK(json::parse(j.out)["passed"] == true);
}

TEST_CASE("simulate") {
  const Run a = run({"simulate", "--landmarks", "4", "--count", "7", "--seed", "3"});
  REQUIRE(a.code == 0);
  std::istringstream in(a.out);
  const LandmarkDataset d = read_landmark_csv(in);
  CHECK(d.dims == Dims(4, 2));
  CHECK(d.specimens.size() == 7);
  CHECK(d.specimens[0].group == "sim");
  CHECK(run({"simulate", "--landmarks", "4", "--count", "7", "--seed", "3"}).out == a.out);
  CHECK(run({"simulate", "--landmarks", "4", "--count", "7", "--seed", "4"}).out != a.out);

  const Run rows = run({"simulate", "--landmarks", "4", "--count", "2", "--no-header", "--group", "Z"});
  CHECK(rows.out.rfind("s1,Z,", 0) == 0);

  const fs::path mean = write_temp("mean.csv", "0,0,0\n1,0,0\n0,1,0\n0,0,1\n");
  const Run k3 = run({"simulate", "--mean", mean.string(), "--model", "kotz3", "--count", "3"});
  CHECK(k3.code == 0);
  CHECK(k3.out.rfind("N,K\n4,3\n", 0) == 0);
  CHECK(run({"simulate", "--dims", "3"}).code == 2);
}
