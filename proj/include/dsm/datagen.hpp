#pragma once

// Synthetic data generators (sparse linear regression, Friedman with
// optional Gaussian-copula dependence) and CSV ingestion with train/test
// splitting and train-only standardization.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsm/bnn.hpp"
#include "dsm/rng.hpp"

namespace dsm::datagen {

struct EmptyFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingColumnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonNumericCellError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Task task = Task::regression;
  std::vector<std::string> feature_names;

  std::vector<int> train_idx, test_idx;
  Eigen::VectorXd x_mean, x_sd;
  double y_mean = 0.0, y_sd = 1.0;
  bool has_stats = false;

  long n() const { return X.rows(); }
  int p() const { return static_cast<int>(X.cols()); }

  void check_finite() const {
    if (!X.allFinite() || !y.allFinite())
      throw std::runtime_error("Dataset: non-finite entries");
  }

  Eigen::MatrixXd rows_of(const std::vector<int>& idx) const {
    Eigen::MatrixXd out(idx.size(), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = X.row(idx[i]);
    return out;
  }
  Eigen::VectorXd y_of(const std::vector<int>& idx) const {
    Eigen::VectorXd out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = y[idx[i]];
    return out;
  }
  Eigen::MatrixXd train_X() const { return rows_of(train_idx); }
  Eigen::MatrixXd test_X() const { return rows_of(test_idx); }
  Eigen::VectorXd train_y() const { return y_of(train_idx); }
  Eigen::VectorXd test_y() const { return y_of(test_idx); }
};

// reproducible shuffle split: train = floor(frac N), test = rest
inline void split(Dataset& d, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac <= 1.0))
    throw std::invalid_argument("split: train_frac in (0,1]");
  const long N = d.n();
  std::vector<int> idx(N);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (long i = N - 1; i > 0; --i)
    std::swap(idx[i], idx[static_cast<long>(rng.uniform() * (i + 1))]);
  const auto n_train = static_cast<long>(std::floor(train_frac * N));
  d.train_idx.assign(idx.begin(), idx.begin() + n_train);
  d.test_idx.assign(idx.begin() + n_train, idx.end());
}

// standardize X (and y for regression) using training-split statistics
inline void standardize(Dataset& d) {
  if (d.train_idx.empty()) {
    d.train_idx.resize(d.n());
    std::iota(d.train_idx.begin(), d.train_idx.end(), 0);
  }
  const Eigen::MatrixXd Xtr = d.train_X();
  const auto n = static_cast<double>(Xtr.rows());
  d.x_mean = Xtr.colwise().mean();
  d.x_sd.resize(d.p());
  for (int j = 0; j < d.p(); ++j) {
    const double v = (Xtr.col(j).array() - d.x_mean[j]).square().sum() / (n - 1.0);
    d.x_sd[j] = (v > 1e-300) ? std::sqrt(v) : 1.0;
  }
  d.X = (d.X.rowwise() - d.x_mean.transpose()).array().rowwise() /
        d.x_sd.transpose().array();
  if (d.task == Task::regression) {
    const Eigen::VectorXd ytr = d.train_y();
    d.y_mean = ytr.mean();
    const double v = (ytr.array() - d.y_mean).square().sum() / (n - 1.0);
    d.y_sd = (v > 1e-300) ? std::sqrt(v) : 1.0;
    d.y = (d.y.array() - d.y_mean) / d.y_sd;
  }
  d.has_stats = true;
}

// Sparse linear example: p = 10 equicorrelated normals, coefficients
// (3, -2, 1.5, 0.8, 0.2, 0, ..., 0), unit Gaussian noise.
inline Dataset gen_linreg(long N, double rho, std::uint64_t seed, bool noiseless = false) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("gen_linreg: rho in [0,1)");
  const int p = 10;
  if (N < p) throw std::invalid_argument("gen_linreg: N >= 10 required");
  Eigen::VectorXd w(p);
  w << 3.0, -2.0, 1.5, 0.8, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0;
  Rng rng(seed);
  Dataset d;
  d.task = Task::regression;
  d.X.resize(N, p);
  const double a = std::sqrt(1.0 - rho), b = std::sqrt(rho);
  for (long i = 0; i < N; ++i) {
    const double g = rng.normal();
    for (int j = 0; j < p; ++j) d.X(i, j) = a * rng.normal() + b * g;
  }
  d.y = d.X * w;
  if (!noiseless)
    for (long i = 0; i < N; ++i) d.y[i] += rng.normal();
  for (int j = 0; j < p; ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  return d;
}

inline Eigen::VectorXd linreg_true_coefficients() {
  Eigen::VectorXd w(10);
  w << 3.0, -2.0, 1.5, 0.8, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0;
  return w;
}

// Uniform covariates with a target Spearman correlation via the Gaussian
// copula R_ij = 2 sin(pi S_ij / 6).
inline Eigen::MatrixXd gaussian_copula_uniform(long N, const Eigen::MatrixXd& spearman,
                                               std::uint64_t seed) {
  const auto p = spearman.rows();
  if (spearman.cols() != p) throw std::invalid_argument("copula: square matrix required");
  Eigen::MatrixXd R = (M_PI / 6.0 * spearman.array()).sin() * 2.0;
  R.diagonal().setOnes();
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R, Eigen::EigenvaluesOnly);
    throw std::invalid_argument("copula: mapped correlation not positive definite (min eig " +
                                std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
  const Eigen::MatrixXd Lc = llt.matrixL();
  Rng rng(seed);
  Eigen::MatrixXd U(N, p);
  Eigen::VectorXd zrow(p);
  for (long i = 0; i < N; ++i) {
    for (long j = 0; j < p; ++j) zrow[j] = rng.normal();
    const Eigen::VectorXd corr = Lc * zrow;
    for (long j = 0; j < p; ++j) U(i, j) = dist::normal_cdf(corr[j]);
  }
  return U;
}

inline Eigen::MatrixXd default_friedman_spearman(int p = 10) {
  Eigen::MatrixXd S(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) S(i, j) = std::pow(0.5, std::abs(i - j));
  return S;
}

inline double friedman_mean(const Eigen::VectorXd& x) {
  return 10.0 * std::sin(M_PI * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) +
         10.0 * x[3] + 5.0 * x[4];
}

// Friedman benchmark on [0,1]^10; only the first five covariates enter.
inline Dataset gen_friedman(long N, bool correlated, const Eigen::MatrixXd* spearman,
                            std::uint64_t seed, bool noiseless = false) {
  if (N < 1) throw std::invalid_argument("gen_friedman: N >= 1");
  const int p = 10;
  Dataset d;
  d.task = Task::regression;
  if (correlated) {
    const Eigen::MatrixXd S = spearman ? *spearman : default_friedman_spearman(p);
    d.X = gaussian_copula_uniform(N, S, seed);
  } else {
    Rng rng(seed);
    d.X.resize(N, p);
    for (long i = 0; i < N; ++i)
      for (int j = 0; j < p; ++j) d.X(i, j) = rng.uniform();
  }
  Rng noise_rng(splitmix64(seed ^ 0x9d2c5680ULL));
  d.y.resize(N);
  for (long i = 0; i < N; ++i)
    d.y[i] = friedman_mean(d.X.row(i)) + (noiseless ? 0.0 : noise_rng.normal());
  for (int j = 0; j < p; ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  return d;
}

// ---- CSV ingestion ----

struct CsvSchema {
  std::string target;
  Task task = Task::regression;
  // column -> (string value -> ordinal code)
  std::map<std::string, std::map<std::string, double>> categorical;
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_cell(const std::string& cell, const std::string& column, long row,
                         const CsvSchema& schema) {
  auto cat = schema.categorical.find(column);
  if (cat != schema.categorical.end()) {
    auto hit = cat->second.find(cell);
    if (hit == cat->second.end())
      throw NonNumericCellError("csv: unmapped categorical value '" + cell + "' in column " +
                                column + " row " + std::to_string(row));
    return hit->second;
  }
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (...) {
    pos = 0;
  }
  if (pos != cell.size() || cell.empty())
    throw NonNumericCellError("csv: non-numeric cell '" + cell + "' in column " + column +
                              " row " + std::to_string(row));
  return v;
}

}  // namespace detail

inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw EmptyFileError("csv: empty file " + path);

  const auto header = detail::split_line(lines[0]);
  long target_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == schema.target) target_col = static_cast<long>(j);
  if (target_col < 0) throw MissingColumnError("csv: missing target column " + schema.target);

  Dataset d;
  d.task = schema.task;
  const long N = static_cast<long>(lines.size()) - 1;
  const long p = static_cast<long>(header.size()) - 1;
  if (N < 1) throw EmptyFileError("csv: no data rows in " + path);
  d.X.resize(N, p);
  d.y.resize(N);
  for (std::size_t j = 0; j < header.size(); ++j)
    if (static_cast<long>(j) != target_col) d.feature_names.push_back(header[j]);
  for (long i = 0; i < N; ++i) {
    const auto cells = detail::split_line(lines[i + 1]);
    if (static_cast<long>(cells.size()) != p + 1)
      throw NonNumericCellError("csv: row " + std::to_string(i + 2) + " has " +
                                std::to_string(cells.size()) + " cells, expected " +
                                std::to_string(p + 1));
    long jx = 0;
    for (long j = 0; j < p + 1; ++j) {
      const double v = detail::parse_cell(cells[j], header[j], i + 2, schema);
      if (j == target_col)
        d.y[i] = v;
      else
        d.X(i, jx++) = v;
    }
  }
  d.check_finite();
  return d;
}

inline void save_csv(const std::string& path, const Dataset& d,
                     const std::string& target_name = "y",
                     const std::string& header_comment = "") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  out.precision(17);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  for (int j = 0; j < d.p(); ++j)
    out << (j < static_cast<int>(d.feature_names.size()) ? d.feature_names[j]
                                                          : "x" + std::to_string(j + 1))
        << ",";
  out << target_name << "\n";
  for (long i = 0; i < d.n(); ++i) {
    for (int j = 0; j < d.p(); ++j) out << d.X(i, j) << ",";
    out << d.y[i] << "\n";
  }
}

}  // namespace dsm::datagen
