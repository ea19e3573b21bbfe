#include "lad/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "lad/pipeline.hpp"
#include "lad/service.hpp"

namespace lad {

namespace {

std::uint64_t default_seed(std::uint64_t fallback) {
  if (const char* env = std::getenv("LAD_SEED"); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(std::string("LAD_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return fallback;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

struct LadFlags {
  int n_support = 1000;
  int m_segment = 100;
  int p_sphere = 20;
  double radius = 0.02;
  int depth = 5;
  int top_k = 5;
  double threshold = 0.0;
  long max_attempts = 1'000'000;

  void add_to(CLI::App& app, bool with_policy) {
    app.add_option("--n-support", n_support, "Support points N")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--m-segment", m_segment, "Samples per segment M")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--p-sphere", p_sphere, "Samples per touchpoint sphere P")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--radius", radius, "Touchpoint sphere radius (scaled units)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--depth", depth, "Surrogate tree max depth")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--max-attempts", max_attempts, "Support-point rejection budget")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    if (with_policy) {
      auto* k = app.add_option("--top-k", top_k, "Number of key features")->check(CLI::PositiveNumber)->capture_default_str();
      app.add_option("--threshold", threshold, "Report every feature with at least this importance instead of top-k")
          ->check(CLI::Range(0.0, 1.0))
          ->excludes(k);
    }
  }

  LadConfig config(std::uint64_t seed) const {
    LadConfig c;
    c.n_support = n_support;
    c.m_segment = m_segment;
    c.p_sphere = p_sphere;
    c.sphere_radius = radius;
    c.surrogate_params.max_depth = depth;
    c.max_rejection_attempts = max_attempts;
    c.key_feature_policy = threshold > 0.0 ? KeyFeaturePolicy::at_least(threshold) : KeyFeaturePolicy::top_k(top_k);
    c.seed = seed;
    return c;
  }
};

void print_table(std::ostream& os, const Json& report) {
  os << "prediction: " << report.value("predicted_class", std::to_string(report.at("predicted_label").get<int>()))
     << "\n";
  os << std::left << std::setw(58) << "feature" << "importance\n";
  for (const auto& k : report.at("key_features")) {
    os << std::left << std::setw(58) << k.at("feature").get<std::string>() << std::fixed << std::setprecision(2)
       << k.at("importance").get<double>() << "\n";
  }
}

int cmd_train(const DataSource& source, int trees, double split_fraction, std::uint64_t seed, std::optional<int> depth,
              const std::string& out_dir, std::ostream& out) {
  TrainOptions opt;
  opt.data = source;
  opt.trees = trees;
  opt.split = split_fraction;
  opt.seed = seed;
  opt.max_depth = depth;
  const TrainResult result = train_model(opt);
  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);
  write_file((dir / "model.json").string(), result.model.dump() + "\n");
  write_file((dir / "metrics.json").string(), dump(result.metrics));
  write_file((dir / "manifest.json").string(), dump(result.workspace.manifest));
  out << "train accuracy " << result.metrics.at("train_accuracy").get<double>() << ", test accuracy "
      << result.metrics.at("test_accuracy").get<double>() << " (" << result.workspace.test.size()
      << " test rows); wrote " << (dir / "model.json").string() << "\n";
  return kExitOk;
}

int cmd_explain(const std::string& model_path, std::optional<long> row, const std::string& instance,
                const LadConfig& config, const std::string& out_path, bool table, std::ostream& out) {
  const Workspace ws = load_workspace_file(model_path);
  Vector encoded;
  std::string id;
  if (row) {
    if (*row < 0 || *row >= ws.test.size()) {
      throw Error("row " + std::to_string(*row) + " out of range: test set has " + std::to_string(ws.test.size()) +
                  " rows");
    }
    encoded = ws.test.instances.row(*row).transpose();
    id = "test:" + std::to_string(*row);
  } else {
    const std::string text = !instance.empty() && instance.front() == '@' ? read_file(instance.substr(1)) : instance;
    Json values;
    try {
      values = Json::parse(text);
    } catch (const Json::exception& e) {
      throw Error(std::string("--instance is not valid JSON: ") + e.what());
    }
    encoded = encode_json_values(ws.schema, values);
    id = "inline";
  }
  const Explanation ex = explain_encoded(ws, encoded, config);
  const Json report = explanation_report(ws, ex, encoded, id);
  if (out_path.empty()) {
    out << dump(report);
  } else {
    write_file(out_path, dump(report));
  }
  if (table) print_table(out, report);
  return kExitOk;
}

int cmd_fidelity(const std::string& model_path, const FidelityConfig& fidelity, const LadConfig& lad,
                 const AugmentConfig& augment, const std::string& csv_path, const std::string& json_path,
                 std::ostream& out) {
  const Workspace ws = load_workspace_file(model_path);
  if (ws.test.size() == 0) throw Error("empty test set");
  const FidelityRun run = run_fidelity(ws, fidelity, lad, augment);
  write_file(csv_path, fidelity_csv({run.lad, run.global}));
  write_file(json_path, dump(fidelity_summary(ws, run, lad, augment)));
  out << "radius_fraction  lad_mean  global_substitute_mean\n";
  for (std::size_t k = 0; k < fidelity.radii.size(); ++k) {
    out << fidelity.radii[k] << "  " << run.lad.mean[k] << "  " << run.global.mean[k] << "\n";
  }
  out << run.lad.instances.size() << " instances evaluated, " << run.lad.failures.size() << " failed\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local adversarial detection: key features to verify for a black-box decision", "lad"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool seed_given = false;
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& v) {
          seed = v;
          seed_given = true;
        },
        "Random seed (default: $LAD_SEED)");
  };

  // train
  auto* train = app.add_subcommand("train", "Train the random-forest black box");
  DataSource source;
  int trees = 200;
  double split_fraction = 0.7;
  int forest_depth = 0;
  std::string out_dir = ".";
  train->add_option("--data", source.path, "Data file")->required();
  train->add_option("--format", source.format, "german | csv")
      ->check(CLI::IsMember({"german", "csv"}))
      ->capture_default_str();
  train->add_option("--schema", source.schema_path, "Schema sidecar JSON for csv data");
  train->add_option("--trees", trees, "Number of trees")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--split", split_fraction, "Train fraction")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  train->add_option("--max-depth", forest_depth, "Per-tree depth limit (default: unlimited)")
      ->check(CLI::PositiveNumber);
  train->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  add_seed(train);

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "Explain one instance with LAD");
  std::string model_path = "model.json";
  long row = -1;
  std::string instance;
  std::string explain_out;
  bool table = false;
  LadFlags explain_flags;
  explain_cmd->add_option("--model", model_path, "Model JSON")->capture_default_str();
  auto* row_opt = explain_cmd->add_option("--row", row, "Test-set row index");
  auto* inst_opt = explain_cmd->add_option("--instance", instance,
                                           "Inline JSON values {feature: value} or encoded array; @file reads a file");
  row_opt->excludes(inst_opt);
  explain_flags.add_to(*explain_cmd, true);
  explain_cmd->add_option("--out", explain_out, "Write the explanation JSON here instead of stdout");
  explain_cmd->add_flag("--table", table, "Also print a key-feature table");
  add_seed(explain_cmd);

  // fidelity
  auto* fidelity_cmd = app.add_subcommand("fidelity", "Local fidelity sweep: LAD versus a global substitute");
  std::vector<double> radii;
  std::string profile = "narrow";
  std::size_t limit = 0;
  Eigen::Index n_eval = 1000;
  std::string csv_path = "fidelity.csv";
  std::string json_path = "fidelity.json";
  LadFlags fidelity_flags;
  AugmentConfig augment;
  fidelity_cmd->add_option("--model", model_path, "Model JSON")->capture_default_str();
  fidelity_cmd->add_option("--radii", radii, "Radius fractions of the max test-set distance")->delimiter(',');
  fidelity_cmd->add_option("--profile", profile, "narrow (0.05%-0.5%) | wide (5%-50%)")
      ->check(CLI::IsMember({"narrow", "wide"}))
      ->capture_default_str();
  fidelity_cmd->add_option("--limit", limit, "Evaluate only the first N test instances");
  fidelity_cmd->add_option("--n-eval", n_eval, "Evaluation points per ball")->check(CLI::PositiveNumber)->capture_default_str();
  fidelity_cmd->add_option("--out-csv", csv_path)->capture_default_str();
  fidelity_cmd->add_option("--out-json", json_path)->capture_default_str();
  fidelity_cmd->add_option("--seed-set", augment.seed_set_size, "Substitute seed set size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fidelity_cmd->add_option("--rho", augment.rho, "Augmentation epochs")->check(CLI::NonNegativeNumber)->capture_default_str();
  fidelity_cmd->add_option("--lambda", augment.lambda, "Augmentation step")->check(CLI::PositiveNumber)->capture_default_str();
  fidelity_flags.add_to(*fidelity_cmd, false);
  add_seed(fidelity_cmd);

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Serve the review-console HTTP API");
  std::string host = "127.0.0.1";
  int port = 8080;
  LadFlags serve_flags;
  serve_cmd->add_option("--model", model_path, "Model JSON")->capture_default_str();
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->check(CLI::Range(1, 65535))->capture_default_str();
  serve_flags.add_to(*serve_cmd, true);
  add_seed(serve_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << "run `lad " << sub->get_name() << " --help` for usage\n";
    }
    return kExitUsage;
  }

  try {
    if (train->parsed()) {
      if (source.format == "csv" && source.schema_path.empty()) {
        err << "error: --schema is required with --format csv\n";
        return kExitUsage;
      }
      const std::optional<int> depth = forest_depth > 0 ? std::optional<int>(forest_depth) : std::nullopt;
      return cmd_train(source, trees, split_fraction, seed_given ? seed : default_seed(7), depth, out_dir, out);
    }
    if (explain_cmd->parsed()) {
      if (row_opt->count() == 0 && inst_opt->count() == 0) {
        err << "error: one of --row or --instance is required\n";
        return kExitUsage;
      }
      const LadConfig config = explain_flags.config(seed_given ? seed : default_seed(0));
      const std::optional<long> r = row_opt->count() ? std::optional<long>(row) : std::nullopt;
      return cmd_explain(model_path, r, instance, config, explain_out, table, out);
    }
    if (fidelity_cmd->parsed()) {
      FidelityConfig fidelity;
      fidelity.radii = !radii.empty() ? radii : profile == "wide" ? wide_radius_fractions() : narrow_radius_fractions();
      fidelity.n_eval = n_eval;
      fidelity.limit = limit;
      fidelity.seed = seed_given ? seed : default_seed(0);
      fidelity.validate();
      augment.seed = fidelity.seed;
      const LadConfig lad = fidelity_flags.config(fidelity.seed);
      return cmd_fidelity(model_path, fidelity, lad, augment, csv_path, json_path, out);
    }
    if (serve_cmd->parsed()) {
      auto ws = std::make_shared<const Workspace>(load_workspace_file(model_path));
      const ReviewService service(ws, serve_flags.config(seed_given ? seed : default_seed(0)));
      out << "serving on http://" << host << ":" << port << "\n" << std::flush;
      if (serve(service, host, port) != 0) {
        err << "error: cannot listen on " << host << ":" << port << "\n";
        return kExitFailure;
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace lad
