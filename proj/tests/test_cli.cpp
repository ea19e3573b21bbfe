#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "lad/cli.hpp"
#include "lad/pipeline.hpp"

using namespace lad;
namespace fs = std::filesystem;

namespace {

const std::string kGerman = std::string(LAD_SOURCE_DIR) + "/data/german.data";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string file_digest(const fs::path& p) { return hex64(file_hash(p.string())); }

// Trains a small model once per test binary.
const fs::path& model_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::current_path() / "cli_model";
    const Run r = run({"train", "--data", kGerman, "--trees", "15", "--seed", "7", "--out-dir", d.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    return d;
  }();
  return dir;
}

const std::vector<std::string> kSmallLad{"--n-support", "40", "--m-segment", "20", "--p-sphere", "10"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("train writes model, metrics and manifest") {
  const fs::path& d = model_dir();
  CHECK(fs::exists(d / "model.json"));
  CHECK(fs::exists(d / "metrics.json"));
  CHECK(fs::exists(d / "manifest.json"));
  const Json metrics = Json::parse(read_file((d / "metrics.json").string()));
  CHECK(metrics.at("test_size") == 300);
  CHECK(metrics.at("train_size") == 700);
  CHECK(metrics.at("manifest").at("split").at("seed") == 7);
  const Json model = Json::parse(read_file((d / "model.json").string()));
  CHECK(model.at("trees").size() == 15);
  CHECK(model.at("manifest").at("dataset").at("hash") == file_digest(kGerman));
}

TEST_CASE("train rerun is byte-identical") {
  const fs::path again = fs::current_path() / "cli_model_again";
  const Run r = run({"train", "--data", kGerman, "--trees", "15", "--seed", "7", "--out-dir", again.string()});
  REQUIRE(r.code == 0);
  for (const char* name : {"model.json", "metrics.json", "manifest.json"}) {
    CHECK(file_digest(again / name) == file_digest(model_dir() / name));
  }
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run({"train", "--data", kGerman, "--trees", "0"}).code == kExitUsage);
  CHECK(run({"train"}).code == kExitUsage);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"bogus"}).code == kExitUsage);
  CHECK(run({"explain", "--model", (model_dir() / "model.json").string()}).code == kExitUsage);
  CHECK(run({"fidelity", "--profile", "huge"}).code == kExitUsage);
  CHECK(run({"train", "--data", kGerman, "--format", "csv"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("runtime failures exit with code 1 and a message") {
  const Run missing = run({"train", "--data", "/nonexistent/german.data"});
  CHECK(missing.code == kExitFailure);
  CHECK(missing.err.find("cannot open") != std::string::npos);
  const Run out_of_range = run({"explain", "--model", (model_dir() / "model.json").string(), "--row", "99999"});
  CHECK(out_of_range.code == kExitFailure);
  CHECK(out_of_range.err.find("out of range") != std::string::npos);
  const Run bad_json = run({"explain", "--model", (model_dir() / "model.json").string(), "--instance", "{nope"});
  CHECK(bad_json.code == kExitFailure);
}

TEST_CASE("explain output is byte-identical under a fixed seed") {
  const std::string model = (model_dir() / "model.json").string();
  const auto args = with({"explain", "--model", model, "--row", "12", "--top-k", "5", "--seed", "1"}, kSmallLad);
  const Run a = run(args);
  const Run b = run(args);
  REQUIRE_MESSAGE(a.code == 0, a.err);
  CHECK(a.out == b.out);
  const Json j = Json::parse(a.out);
  CHECK(j.at("instance_id") == "test:12");
  CHECK(j.at("key_features").size() <= 5);
  CHECK(j.at("key_features").size() >= 1);
  CHECK(j.at("seed") == 1);
  CHECK(j.at("manifest").at("lad").at("n_support") == 40);
  CHECK(j.at("manifest").at("model").at("path") == model);

  const Run table = run(with({"explain", "--model", model, "--row", "12", "--seed", "1", "--table"}, kSmallLad));
  CHECK(table.out.find("importance") != std::string::npos);
}

TEST_CASE("explain accepts inline raw values") {
  const std::string model = (model_dir() / "model.json").string();
  const Workspace ws = load_workspace_file(model);
  const Json values = decode_json_values(ws.schema, ws.test.instances.row(12).transpose());
  const Run inl = run(with({"explain", "--model", model, "--instance", values.dump(), "--seed", "1"}, kSmallLad));
  const Run row = run(with({"explain", "--model", model, "--row", "12", "--seed", "1"}, kSmallLad));
  REQUIRE_MESSAGE(inl.code == 0, inl.err);
  const Json a = Json::parse(inl.out), b = Json::parse(row.out);
  CHECK(a.at("importances") == b.at("importances"));
  CHECK(a.at("instance_id") == "inline");
}

TEST_CASE("LAD_SEED provides the default seed") {
  const std::string model = (model_dir() / "model.json").string();
  const auto base = with({"explain", "--model", model, "--row", "3"}, kSmallLad);
  ::setenv("LAD_SEED", "5", 1);
  const Run env = run(base);
  ::unsetenv("LAD_SEED");
  const Run flag = run(with(base, {"--seed", "5"}));
  REQUIRE(env.code == 0);
  CHECK(env.out == flag.out);
}

TEST_CASE("fidelity emits limit x radii x 2 rows and reproduces bytes") {
  const std::string model = (model_dir() / "model.json").string();
  const fs::path dir = fs::current_path();
  auto args = [&](const std::string& tag) {
    return with({"fidelity", "--model", model, "--radii", "0.0005,0.001,0.0025,0.005", "--limit", "10", "--n-eval", "100",
                 "--seed-set", "50", "--rho", "1", "--seed", "2", "--out-csv", (dir / ("fid_" + tag + ".csv")).string(),
                 "--out-json", (dir / ("fid_" + tag + ".json")).string()},
                kSmallLad);
  };
  const Run a = run(args("a"));
  REQUIRE_MESSAGE(a.code == 0, a.err);
  const std::string csv = read_file((dir / "fid_a.csv").string());
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 10 * 4 * 2);
  CHECK(csv.find(",lad,") != std::string::npos);
  CHECK(csv.find(",global_substitute,") != std::string::npos);
  const Json summary = Json::parse(read_file((dir / "fid_a.json").string()));
  CHECK(summary.at("reports").size() == 2);
  CHECK(summary.at("manifest").contains("fidelity"));
  CHECK(summary.at("substitute").at("training_set_size") == 100);

  REQUIRE(run(args("b")).code == 0);
  CHECK(file_digest(dir / "fid_a.csv") == file_digest(dir / "fid_b.csv"));
  CHECK(file_digest(dir / "fid_a.json") == file_digest(dir / "fid_b.json"));

  const Run unsorted = run({"fidelity", "--model", model, "--radii", "0.01,0.001"});
  CHECK(unsorted.code != kExitOk);
}

TEST_CASE("fidelity on an empty test set fails") {
  const fs::path dir = fs::current_path() / "cli_empty";
  fs::create_directories(dir);
  write_file((dir / "schema.json").string(),
             R"({"columns": [{"name": "a"}, {"name": "y", "kind": "categorical", "levels": ["n", "p"]}], "label": "y"})");
  write_file((dir / "data.csv").string(), "a,y\n1,n\n2,n\n3,p\n4,p\n");
  // With 0.9 of 2 + 2 rows every row lands in the training split.
  const Run t = run({"train", "--data", (dir / "data.csv").string(), "--format", "csv", "--schema",
                     (dir / "schema.json").string(), "--split", "0.9", "--trees", "3", "--out-dir", dir.string()});
  REQUIRE_MESSAGE(t.code == 0, t.err);
  const Run f = run({"fidelity", "--model", (dir / "model.json").string(), "--out-csv", (dir / "f.csv").string(),
                     "--out-json", (dir / "f.json").string()});
  CHECK(f.code == kExitFailure);
  CHECK(f.err.find("empty test set") != std::string::npos);
}
