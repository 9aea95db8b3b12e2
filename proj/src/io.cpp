#include "specgmm/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include "specgmm/error.hpp"

namespace specgmm::io {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  std::istringstream stream(line);
  while (std::getline(stream, current, ',')) fields.push_back(current);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_double(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidSpec, "line " + std::to_string(line) + ": '" + text + "' is not a number");
  }
}

Eigen::MatrixXd matrix_from_rows(const nlohmann::json& rows, std::string_view field) {
  if (!rows.is_array() || rows.empty() || !rows.front().is_array()) {
    throw Error(ErrorCode::InvalidSpec, "field '" + std::string(field) + "': expected an array of rows");
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) {
      throw Error(ErrorCode::InvalidSpec, "field '" + std::string(field) + "': ragged row " + std::to_string(i + 1));
    }
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

nlohmann::json matrix_to_rows(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
T field(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) throw Error(ErrorCode::InvalidSpec, std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("field '") + name + "': " + e.what());
  }
}

template <typename T>
T field_or(const nlohmann::json& j, const char* name, T fallback) {
  return j.contains(name) ? field<T>(j, name) : fallback;
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known, std::string_view where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidSpec, std::string(where) + ": expected a JSON object");
  const std::set<std::string_view> allowed(known);
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key())) {
      throw Error(ErrorCode::InvalidSpec, std::string(where) + ": unknown field '" + item.key() + "'");
    }
  }
}

NoiseModel noise_from_json(const nlohmann::json& j, int p) {
  if (j.is_string()) return noise_from_json(nlohmann::json{{"variant", j}}, p);
  reject_unknown(j, {"variant", "covariance", "variance_proxy"}, "noise");
  const auto variant = field<std::string>(j, "variant");
  if (variant == "isotropic-gaussian") return NoiseModel::isotropic();
  if (variant == "bounded-uniform") return NoiseModel::bounded_uniform(field_or<double>(j, "variance_proxy", 1.0));
  if (variant == "gaussian-with-covariance") {
    if (!j.contains("covariance")) throw Error(ErrorCode::InvalidSpec, "noise: missing field 'covariance'");
    const auto& cov = j.at("covariance");
    if (cov.is_number()) return NoiseModel::gaussian(cov.get<double>() * Eigen::MatrixXd::Identity(p, p));
    return NoiseModel::gaussian(matrix_from_rows(cov, "noise.covariance"));
  }
  throw Error(ErrorCode::InvalidSpec, "noise: unknown variant '" + variant + "'");
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << 'c' << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidSpec, "empty CSV");
  const std::size_t cols = split_fields(strip_cr(line)).size();
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != cols) {
      throw Error(ErrorCode::InvalidSpec, "line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                                              " fields, found " + std::to_string(fields.size()));
    }
    for (const auto& f : fields) values.push_back(parse_double(f, line_no));
    ++rows;
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
  return m;
}

void write_labels_csv(std::ostream& out, const LabelVector& labels) {
  out << "label\n";
  for (int z : labels) out << (z + 1) << '\n';
}

LabelVector read_labels_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidSpec, "empty label CSV");
  LabelVector labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const double v = parse_double(line, line_no);
    if (v < 1 || v != static_cast<int>(v)) {
      throw Error(ErrorCode::LabelOutOfRange, "line " + std::to_string(line_no) + ": labels are integers >= 1");
    }
    labels.push_back(static_cast<int>(v) - 1);
  }
  return labels;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return read_matrix_csv(in);
}

void save_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ostringstream out;
  write_matrix_csv(out, m);
  write_file(path, out.str());
}

GmmSpec spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, {"n", "p", "k", "delta", "beta", "layout", "centers", "centers_csv", "noise", "seed"}, "spec");
  GmmSpec spec;
  spec.n = field<int>(j, "n");
  spec.p = field<int>(j, "p");
  spec.k = field<int>(j, "k");
  spec.delta = field<double>(j, "delta");
  spec.beta = field_or<double>(j, "beta", 1.0);
  spec.seed = field_or<std::uint64_t>(j, "seed", 0);

  const auto layout = field_or<std::string>(j, "layout", "simplex");
  if (layout == "simplex") {
    spec.layout = Layout::Simplex;
  } else if (layout == "collinear") {
    spec.layout = Layout::Collinear;
  } else if (layout == "explicit") {
    spec.layout = Layout::Explicit;
    if (j.contains("centers")) {
      spec.explicit_centers = matrix_from_rows(j.at("centers"), "centers");
    } else if (j.contains("centers_csv")) {
      auto path = std::filesystem::path(field<std::string>(j, "centers_csv"));
      if (path.is_relative()) path = base_dir / path;
      spec.explicit_centers = load_matrix_csv(path);
    } else {
      throw Error(ErrorCode::InvalidSpec, "explicit layout needs 'centers' or 'centers_csv'");
    }
  } else {
    throw Error(ErrorCode::InvalidSpec, "field 'layout': unknown layout '" + layout + "'");
  }
  spec.noise = j.contains("noise") ? noise_from_json(j.at("noise"), spec.p) : NoiseModel::isotropic();
  return spec;
}

nlohmann::json spec_to_json(const GmmSpec& spec) {
  nlohmann::json j;
  j["n"] = spec.n;
  j["p"] = spec.p;
  j["k"] = spec.k;
  j["delta"] = spec.delta;
  j["beta"] = spec.beta;
  switch (spec.layout) {
    case Layout::Simplex: j["layout"] = "simplex"; break;
    case Layout::Collinear: j["layout"] = "collinear"; break;
    case Layout::Explicit:
      j["layout"] = "explicit";
      j["centers"] = matrix_to_rows(spec.explicit_centers);
      break;
  }
  nlohmann::json noise;
  switch (spec.noise.variant) {
    case NoiseVariant::IsotropicGaussian: noise["variant"] = "isotropic-gaussian"; break;
    case NoiseVariant::GaussianWithCovariance:
      noise["variant"] = "gaussian-with-covariance";
      noise["covariance"] = matrix_to_rows(spec.noise.covariance);
      break;
    case NoiseVariant::BoundedUniform:
      noise["variant"] = "bounded-uniform";
      noise["variance_proxy"] = spec.noise.variance_proxy;
      break;
  }
  j["noise"] = std::move(noise);
  j["seed"] = spec.seed;
  return j;
}

KMeansConfig kmeans_from_json(const nlohmann::json& j, KMeansConfig defaults) {
  reject_unknown(j, {"restarts", "max_iters", "tol", "seed"}, "kmeans");
  defaults.restarts = field_or<int>(j, "restarts", defaults.restarts);
  defaults.max_iters = field_or<int>(j, "max_iters", defaults.max_iters);
  defaults.tol = field_or<double>(j, "tol", defaults.tol);
  defaults.seed = field_or<std::uint64_t>(j, "seed", defaults.seed);
  if (defaults.restarts < 1 || defaults.max_iters < 1) {
    throw Error(ErrorCode::InvalidSpec, "kmeans: restarts and max_iters must be >= 1");
  }
  return defaults;
}

nlohmann::json kmeans_to_json(const KMeansConfig& config) {
  return {{"restarts", config.restarts}, {"max_iters", config.max_iters}, {"tol", config.tol}, {"seed", config.seed}};
}

SweepConfig sweep_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, {"base", "delta_grid", "trials_per_delta", "algorithms", "master_seed", "kmeans"}, "sweep");
  SweepConfig config;
  if (!j.contains("base")) throw Error(ErrorCode::InvalidSpec, "sweep: missing field 'base'");
  nlohmann::json base = j.at("base");
  if (base.is_object() && !base.contains("delta")) base["delta"] = 1.0;
  config.base = spec_from_json(base, base_dir);
  config.delta_grid = field<std::vector<double>>(j, "delta_grid");
  config.trials_per_delta = field_or<int>(j, "trials_per_delta", 1);
  if (j.contains("algorithms")) {
    config.algorithms.clear();
    for (const auto& name : field<std::vector<std::string>>(j, "algorithms")) {
      config.algorithms.push_back(parse_algorithm(name));
    }
  }
  config.master_seed = field_or<std::uint64_t>(j, "master_seed", 0);
  if (j.contains("kmeans")) config.kmeans = kmeans_from_json(j.at("kmeans"));
  return config;
}

nlohmann::json sweep_config_to_json(const SweepConfig& config) {
  auto algorithms = nlohmann::json::array();
  for (auto a : config.algorithms) algorithms.push_back(std::string(to_string(a)));
  return {{"base", spec_to_json(config.base)},
          {"delta_grid", config.delta_grid},
          {"trials_per_delta", config.trials_per_delta},
          {"algorithms", algorithms},
          {"master_seed", config.master_seed},
          {"kmeans", kmeans_to_json(config.kmeans)}};
}

nlohmann::json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidSpec, path.string() + ": " + e.what());
  }
}

}  // namespace specgmm::io
