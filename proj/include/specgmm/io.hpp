#pragma once

// File formats: CSV matrices (17 significant digits, header row, LF endings)
// and JSON documents for specs and configs.

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

#include "specgmm/harness.hpp"
#include "specgmm/kmeans.hpp"
#include "specgmm/matgen.hpp"

namespace specgmm::io {

/// "%.17g"; round-trips every finite double.
std::string format_double(double x);

/// Header `c1,...,cN`, then one line per matrix row.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(std::istream& in);

/// Header `label`, then one 1-based label per line.
void write_labels_csv(std::ostream& out, const LabelVector& labels);
LabelVector read_labels_csv(std::istream& in);

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path);
void save_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// `base_dir` resolves a relative `centers_csv` path of the explicit layout.
GmmSpec spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json spec_to_json(const GmmSpec& spec);

KMeansConfig kmeans_from_json(const nlohmann::json& j, KMeansConfig defaults = {});
nlohmann::json kmeans_to_json(const KMeansConfig& config);

/// Keys: base (spec object), delta_grid, trials_per_delta, algorithms, master_seed, kmeans.
SweepConfig sweep_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json sweep_config_to_json(const SweepConfig& config);

nlohmann::json parse_json_file(const std::filesystem::path& path);

}  // namespace specgmm::io
