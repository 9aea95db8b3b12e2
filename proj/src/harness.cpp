#include "specgmm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "specgmm/error.hpp"
#include "specgmm/io.hpp"
#include "specgmm/metrics.hpp"
#include "specgmm/parallel.hpp"
#include "specgmm/rng.hpp"

namespace specgmm::harness {

namespace {

constexpr std::uint64_t kTrialTag = 0x747269616cULL;  // "trial"

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master_seed, int delta_index, int trial) {
  return rng::combine({master_seed, kTrialTag, static_cast<std::uint64_t>(delta_index),
                       static_cast<std::uint64_t>(trial)});
}

TrialRecord run_trial(const GmmSpec& spec, Algorithm algorithm, const KMeansConfig& kmeans_config) {
  TrialRecord record;
  record.delta = spec.delta;
  record.algorithm = algorithm;
  record.seed_used = spec.seed;

  const auto start = std::chrono::steady_clock::now();
  const GmmInstance instance = matgen::sample_instance(spec);
  KMeansConfig config = kmeans_config;
  config.seed = rng::combine({kmeans_config.seed, spec.seed});
  const SpectralOutput out = spectral::run(algorithm, instance.X, spec.k, config);
  const auto stop = std::chrono::steady_clock::now();

  record.loss = metrics::misclustering_loss(out.labels, instance.z_star, spec.k).loss;
  record.objective = out.objective;
  record.unrefined_objective = out.unrefined_objective;
  if (algorithm == Algorithm::Alg2) {
    const Eigen::MatrixXd y = out.svd.sigma.asDiagonal() * out.svd.V.transpose();
    record.locally_optimal = kmeans::is_locally_optimal(y, out.labels, out.centers_reduced);
  }
  record.elapsed_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  return record;
}

void validate(const SweepConfig& config) {
  if (config.delta_grid.empty()) throw Error(ErrorCode::InvalidSpec, "delta_grid is empty");
  for (std::size_t i = 0; i < config.delta_grid.size(); ++i) {
    if (!(config.delta_grid[i] > 0.0)) throw Error(ErrorCode::InvalidSpec, "delta_grid entries must be positive");
    if (i > 0 && !(config.delta_grid[i] > config.delta_grid[i - 1])) {
      throw Error(ErrorCode::InvalidSpec, "delta_grid must be strictly increasing");
    }
  }
  if (config.trials_per_delta < 1) throw Error(ErrorCode::InvalidSpec, "trials_per_delta must be >= 1");
  if (config.algorithms.empty()) throw Error(ErrorCode::InvalidSpec, "algorithms is empty");
  GmmSpec probe = config.base;
  probe.delta = config.delta_grid.front();
  matgen::validate(probe);
}

std::vector<TrialRecord> run_sweep(const SweepConfig& config, unsigned threads) {
  validate(config);
  const std::size_t n_delta = config.delta_grid.size();
  const std::size_t n_trial = static_cast<std::size_t>(config.trials_per_delta);
  const std::size_t n_alg = config.algorithms.size();
  std::vector<TrialRecord> records(n_delta * n_trial * n_alg);

  parallel_for(records.size(), threads, [&](std::size_t slot) {
    const int d = static_cast<int>(slot / (n_trial * n_alg));
    const int t = static_cast<int>((slot / n_alg) % n_trial);
    const Algorithm alg = config.algorithms[slot % n_alg];
    GmmSpec spec = config.base;
    spec.delta = config.delta_grid[static_cast<std::size_t>(d)];
    spec.seed = trial_seed(config.master_seed, d, t);
    TrialRecord record;
    try {
      record = run_trial(spec, alg, config.kmeans);
    } catch (const std::exception& e) {
      record.delta = spec.delta;
      record.algorithm = alg;
      record.seed_used = spec.seed;
      record.loss = std::numeric_limits<double>::quiet_NaN();
      record.objective = std::numeric_limits<double>::quiet_NaN();
      record.error = e.what();
      if (record.error.empty()) record.error = "unknown failure";
    }
    record.delta_index = d;
    record.trial_index = t;
    records[slot] = std::move(record);
  });
  return records;
}

RateFit fit_rate(const std::vector<TrialRecord>& records, Algorithm algorithm) {
  struct Bucket {
    double sum = 0.0;
    int count = 0;
  };
  std::map<double, Bucket> buckets;
  for (const auto& r : records) {
    if (r.algorithm != algorithm) continue;
    auto& b = buckets[r.delta];
    if (!r.failed() && std::isfinite(r.loss)) {
      b.sum += r.loss;
      ++b.count;
    }
  }

  RateFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [delta, b] : buckets) {
    const double mean = b.count > 0 ? b.sum / b.count : 0.0;
    fit.deltas.push_back(delta);
    fit.mean_losses.push_back(mean);
    if (mean > 0.0) {
      xs.push_back(delta * delta);
      ys.push_back(std::log(mean));
    } else {
      ++fit.n_censored;
    }
  }
  fit.n_points_used = static_cast<int>(xs.size());
  if (xs.size() < 2) {
    throw Error(ErrorCode::InsufficientUncensoredPoints,
                std::to_string(xs.size()) + " grid point(s) with positive mean loss; at least 2 are needed");
  }

  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << "delta,trial,algorithm,loss,objective,elapsed_ms,seed\n";
  for (const auto& r : records) {
    out << io::format_double(r.delta) << ',' << r.trial_index << ',' << to_string(r.algorithm) << ','
        << io::format_double(r.loss) << ',' << io::format_double(r.objective) << ','
        << io::format_double(r.elapsed_ms) << ',' << r.seed_used << '\n';
  }
}

void write_records_json(std::ostream& out, const std::vector<TrialRecord>& records) {
  auto arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j;
    j["delta"] = r.delta;
    j["trial_index"] = r.trial_index;
    j["algorithm"] = std::string(to_string(r.algorithm));
    j["loss"] = r.failed() ? nlohmann::json(nullptr) : nlohmann::json(r.loss);
    j["objective"] = r.failed() ? nlohmann::json(nullptr) : nlohmann::json(r.objective);
    j["elapsed_ms"] = r.elapsed_ms;
    j["seed_used"] = r.seed_used;
    if (r.failed()) j["error"] = r.error;
    arr.push_back(std::move(j));
  }
  out << arr.dump(2) << '\n';
}

std::vector<TrialRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "delta,trial,algorithm,loss,objective,elapsed_ms,seed") {
    throw Error(ErrorCode::InvalidSpec, "line 1: expected header delta,trial,algorithm,loss,objective,elapsed_ms,seed");
  }
  std::vector<TrialRecord> records;
  std::map<double, int> delta_index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) f.push_back(cell);
    if (f.size() != 7) {
      throw Error(ErrorCode::InvalidSpec, "line " + std::to_string(line_no) + ": expected 7 fields");
    }
    TrialRecord r;
    try {
      r.delta = std::stod(f[0]);
      r.trial_index = std::stoi(f[1]);
      r.algorithm = parse_algorithm(f[2]);
      r.loss = std::stod(f[3]);
      r.objective = std::stod(f[4]);
      r.elapsed_ms = std::stod(f[5]);
      r.seed_used = std::stoull(f[6]);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidSpec, "line " + std::to_string(line_no) + ": malformed field");
    }
    if (std::isnan(r.loss)) r.error = "failed";
    else if (r.loss < 0.0 || r.loss > 1.0) {
      throw Error(ErrorCode::InvalidSpec, "line " + std::to_string(line_no) + ": loss outside [0, 1]");
    }
    delta_index.emplace(r.delta, 0);
    records.push_back(std::move(r));
  }
  int next = 0;
  for (auto& [delta, idx] : delta_index) idx = next++;
  for (auto& r : records) r.delta_index = delta_index.at(r.delta);
  return records;
}

std::string rate_fit_json(const RateFit& fit) {
  nlohmann::json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["n_points_used"] = fit.n_points_used;
  j["n_censored"] = fit.n_censored;
  j["reference_slope"] = fit.reference_slope;
  j["deltas"] = fit.deltas;
  j["mean_losses"] = fit.mean_losses;
  return j.dump(2) + "\n";
}

std::string rate_plot_svg(const RateFit& fit) {
  constexpr double width = 640.0;
  constexpr double height = 420.0;
  constexpr double left = 70.0;
  constexpr double right = 20.0;
  constexpr double top = 20.0;
  constexpr double bottom = 50.0;

  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < fit.deltas.size(); ++i) {
    if (fit.mean_losses[i] > 0.0) pts.emplace_back(fit.deltas[i] * fit.deltas[i], std::log(fit.mean_losses[i]));
  }
  double x0 = 0.0, x1 = 1.0, y0 = -1.0, y1 = 0.0;
  if (!pts.empty()) {
    x0 = x1 = pts.front().first;
    y0 = y1 = pts.front().second;
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  const double xpad = std::max(1e-9, 0.05 * (x1 - x0)) + (x1 == x0 ? 1.0 : 0.0);
  const double ypad = std::max(1e-9, 0.1 * (y1 - y0)) + (y1 == y0 ? 1.0 : 0.0);
  x0 -= xpad;
  x1 += xpad;
  y0 -= ypad;
  y1 += ypad;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * (width - left - right); };
  auto sy = [&](double y) { return top + (y1 - y) / (y1 - y0) * (height - top - bottom); };
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<clipPath id=\"plot\"><rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right
      << "\" height=\"" << height - top - bottom << "\"/></clipPath>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
      << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0;
    const double yv = y0 + (y1 - y0) * t / 4.0;
    svg << "<text x=\"" << num(sx(xv)) << "\" y=\"" << height - bottom + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << num(sy(yv) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << num(yv) << "</text>\n";
  }
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10
      << "\" font-size=\"13\" text-anchor=\"middle\">delta^2</text>\n";
  svg << "<text x=\"16\" y=\"" << (top + height - bottom) / 2 << "\" font-size=\"13\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 16 " << (top + height - bottom) / 2 << ")\">log mean loss</text>\n";

  if (pts.size() >= 2) {
    double cx = 0.0, cy = 0.0;
    for (const auto& [x, y] : pts) {
      cx += x;
      cy += y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());
    auto line = [&](double slope, double intercept, const char* colour, const char* dash) {
      svg << "<line clip-path=\"url(#plot)\" x1=\"" << num(sx(x0)) << "\" y1=\"" << num(sy(intercept + slope * x0))
          << "\" x2=\"" << num(sx(x1)) << "\" y2=\"" << num(sy(intercept + slope * x1)) << "\" stroke=\"" << colour
          << "\" stroke-width=\"1.5\"" << dash << "/>\n";
    };
    line(fit.slope, fit.intercept, "steelblue", "");
    line(fit.reference_slope, cy - fit.reference_slope * cx, "firebrick", " stroke-dasharray=\"6 4\"");
  }
  for (const auto& [x, y] : pts) {
    svg << "<circle cx=\"" << num(sx(x)) << "\" cy=\"" << num(sy(y)) << "\" r=\"4\" fill=\"black\"/>\n";
  }
  svg << "<text x=\"" << left + 10 << "\" y=\"" << top + 16 << "\" font-size=\"12\" fill=\"steelblue\">fit slope "
      << num(fit.slope) << "</text>\n";
  svg << "<text x=\"" << left + 10 << "\" y=\"" << top + 32 << "\" font-size=\"12\" fill=\"firebrick\">reference slope "
      << num(fit.reference_slope) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace specgmm::harness
