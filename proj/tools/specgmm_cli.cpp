// specgmm command-line entry point: generate, cluster, sweep, fit, verify.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "specgmm/error.hpp"
#include "specgmm/harness.hpp"
#include "specgmm/io.hpp"
#include "specgmm/metrics.hpp"
#include "specgmm/spectral.hpp"
#include "specgmm/verify.hpp"

namespace fs = std::filesystem;
using namespace specgmm;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  unsigned threads = 0;
  std::string format = "csv";
  std::string algorithm = "alg1";
  std::optional<std::uint64_t> seed;
};

// Thrown for problems found by the CLI itself (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path prepare_out(const Options& o) {
  const fs::path out(o.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out.string() + ": " + ec.message());
  return out;
}

fs::path require_config(const Options& o) {
  if (o.config.empty()) throw UsageError("--config is required for this command");
  return fs::path(o.config);
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string labels_text(const LabelVector& labels) {
  std::ostringstream s;
  io::write_labels_csv(s, labels);
  return s.str();
}

int cmd_generate(const Options& o) {
  const fs::path config = require_config(o);
  GmmSpec spec = io::spec_from_json(io::parse_json_file(config), config.parent_path());
  if (o.seed) spec.seed = *o.seed;
  const GmmInstance inst = matgen::sample_instance(spec);
  const fs::path out = prepare_out(o);
  io::save_matrix_csv(out / "X.csv", inst.X);
  io::write_file(out / "z_star.csv", labels_text(inst.z_star));
  io::save_matrix_csv(out / "centers.csv", inst.centers);
  io::write_file(out / "spec.json", dump(io::spec_to_json(spec)));
  std::cout << "wrote " << spec.p << " x " << spec.n << " instance to " << out.string() << "\n";
  return 0;
}

// --config is either a directory written by `generate` or a JSON file with
// keys input (directory) or spec (inline instance), plus optional k and kmeans.
int cmd_cluster(const Options& o) {
  const fs::path config = require_config(o);
  fs::path dir;
  std::optional<int> k;
  KMeansConfig km;
  std::optional<GmmInstance> inline_instance;

  if (fs::is_directory(config)) {
    dir = config;
  } else {
    const auto j = io::parse_json_file(config);
    if (!j.is_object()) throw Error(ErrorCode::InvalidSpec, "cluster config must be a JSON object");
    for (const auto& item : j.items()) {
      if (item.key() != "input" && item.key() != "spec" && item.key() != "k" && item.key() != "kmeans") {
        throw Error(ErrorCode::InvalidSpec, "cluster: unknown field '" + item.key() + "'");
      }
    }
    if (j.contains("kmeans")) km = io::kmeans_from_json(j.at("kmeans"));
    if (j.contains("k")) k = j.at("k").get<int>();
    if (j.contains("spec")) {
      inline_instance = matgen::sample_instance(io::spec_from_json(j.at("spec"), config.parent_path()));
      if (!k) k = inline_instance->spec.k;
    } else if (j.contains("input")) {
      dir = config.parent_path() / j.at("input").get<std::string>();
    } else {
      throw Error(ErrorCode::InvalidSpec, "cluster config needs 'input' or 'spec'");
    }
  }
  if (o.seed) km.seed = *o.seed;

  Eigen::MatrixXd x;
  std::optional<LabelVector> z_star;
  if (inline_instance) {
    x = inline_instance->X;
    z_star = inline_instance->z_star;
  } else {
    if (!fs::exists(dir / "X.csv")) throw Error(ErrorCode::MissingInput, "no X.csv in " + dir.string());
    x = io::load_matrix_csv(dir / "X.csv");
    if (!k && fs::exists(dir / "spec.json")) k = io::parse_json_file(dir / "spec.json").at("k").get<int>();
    if (fs::exists(dir / "z_star.csv")) {
      std::istringstream in(io::read_file(dir / "z_star.csv"));
      z_star = io::read_labels_csv(in);
    }
  }
  if (!k) throw Error(ErrorCode::MissingInput, "k is unknown: give it in the config or provide spec.json");

  const Algorithm alg = parse_algorithm(o.algorithm);
  const SpectralOutput result = spectral::run(alg, x, *k, km);

  nlohmann::json summary;
  summary["algorithm"] = std::string(to_string(alg));
  summary["k"] = *k;
  summary["n"] = x.cols();
  summary["p"] = x.rows();
  summary["objective"] = result.objective;
  summary["restart"] = result.restart;
  if (result.unrefined_objective) summary["unrefined_objective"] = *result.unrefined_objective;
  if (z_star) {
    if (z_star->size() != result.labels.size()) {
      throw Error(ErrorCode::LengthMismatch, "z_star.csv has " + std::to_string(z_star->size()) + " labels, X has " +
                                                 std::to_string(result.labels.size()) + " columns");
    }
    summary["loss"] = metrics::misclustering_loss(result.labels, *z_star, *k).loss;
  }
  if (alg == Algorithm::Alg3) {
    const SpectralOutput first = spectral::algorithm1(x, *k, km);
    summary["between_algorithm_loss"] = metrics::misclustering_loss(result.labels, first.labels, *k).loss;
  }

  const fs::path out = prepare_out(o);
  io::write_file(out / "labels.csv", labels_text(result.labels));
  io::save_matrix_csv(out / "centers_hat.csv", result.centers_ambient);
  io::write_file(out / "summary.json", dump(summary));
  std::cout << summary.dump() << "\n";
  return 0;
}

void write_fit_outputs(const fs::path& out, const std::vector<TrialRecord>& records, Algorithm alg) {
  const RateFit fit = harness::fit_rate(records, alg);
  io::write_file(out / "ratefit.json", harness::rate_fit_json(fit));
  io::write_file(out / "rate.svg", harness::rate_plot_svg(fit));
  std::cout << "slope " << fit.slope << " (reference " << fit.reference_slope << "), " << fit.n_points_used
            << " points used, " << fit.n_censored << " censored\n";
}

int cmd_sweep(const Options& o, bool algorithm_given) {
  const fs::path config_path = require_config(o);
  SweepConfig config = io::sweep_config_from_json(io::parse_json_file(config_path), config_path.parent_path());
  if (o.seed) config.master_seed = *o.seed;
  if (algorithm_given) config.algorithms = {parse_algorithm(o.algorithm)};
  harness::validate(config);

  const auto records = harness::run_sweep(config, o.threads);
  const fs::path out = prepare_out(o);
  std::ostringstream table;
  if (o.format == "json") {
    harness::write_records_json(table, records);
    io::write_file(out / "records.json", table.str());
  } else {
    harness::write_records_csv(table, records);
    io::write_file(out / "records.csv", table.str());
  }
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.failed() ? 1 : 0;
  std::cout << records.size() << " trials, " << failed << " failed\n";
  write_fit_outputs(out, records, config.algorithms.front());
  return 0;
}

int cmd_fit(const Options& o) {
  const fs::path config = require_config(o);
  std::istringstream in(io::read_file(config));
  const auto records = harness::read_records_csv(in);
  write_fit_outputs(prepare_out(o), records, parse_algorithm(o.algorithm));
  return 0;
}

int cmd_verify(const Options& o) {
  verify::VerifyConfig config;
  if (!o.config.empty()) config = verify::config_from_json(io::parse_json_file(o.config));
  if (o.seed) config.seed = *o.seed;
  const auto results = verify::run_all(config, o.threads);
  const auto j = verify::to_json(results);
  io::write_file(prepare_out(o) / "verify.json", dump(j));
  for (const auto& r : results) {
    std::cout << (r.skipped ? "SKIP " : r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
  }
  return j.at("all_passed").get<bool>() ? 0 : 1;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InsufficientUncensoredPoints: return 3;
    case ErrorCode::NoConvergence: return 1;
    default: return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral clustering for Gaussian mixtures: instances, clustering, sweeps and lemma checks"};
  app.require_subcommand(1);
  Options o;
  bool algorithm_given = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Path to the JSON config (or input file / directory)");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--threads", o.threads, "Worker threads, 0 = one per core");
    sub->add_option("--format", o.format, "Record format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option_function<std::string>(
           "--algorithm",
           [&](const std::string& a) {
             o.algorithm = a;
             algorithm_given = true;
           },
           "alg1, alg2 or alg3")
        ->check(CLI::IsMember({"alg1", "alg2", "alg3"}));
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { o.seed = s; }, "Seed override");
  };
  auto* generate = app.add_subcommand("generate", "Sample an instance X = P + E");
  auto* cluster = app.add_subcommand("cluster", "Cluster the columns of X");
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over delta with a rate fit");
  auto* fit = app.add_subcommand("fit", "Rate fit from an existing records CSV");
  auto* verify_cmd = app.add_subcommand("verify", "Run the lemma check suite");
  for (auto* sub : {generate, cluster, sweep, fit, verify_cmd}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) return cmd_generate(o);
    if (cluster->parsed()) return cmd_cluster(o);
    if (sweep->parsed()) return cmd_sweep(o, algorithm_given);
    if (fit->parsed()) return cmd_fit(o);
    if (verify_cmd->parsed()) return cmd_verify(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid-spec: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
