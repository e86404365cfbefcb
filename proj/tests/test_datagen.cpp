#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dsm/datagen.hpp"

using namespace dsm;
using namespace dsm::datagen;

namespace {

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean(), mb = b.mean();
  const double num = ((a.array() - ma) * (b.array() - mb)).sum();
  return num / std::sqrt((a.array() - ma).square().sum() * (b.array() - mb).square().sum());
}

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  auto ranks = [](const Eigen::VectorXd& v) {
    std::vector<long> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](long i, long j) { return v[i] < v[j]; });
    Eigen::VectorXd r(v.size());
    for (long i = 0; i < v.size(); ++i) r[order[i]] = static_cast<double>(i);
    return r;
  };
  return pearson(ranks(a), ranks(b));
}

}  // namespace

TEST_CASE("linear regression generator") {
  SECTION("independent covariates at rho = 0") {
    auto d = gen_linreg(100000, 0.0, 11);
    const double se = 1.0 / std::sqrt(static_cast<double>(d.n()));
    for (auto [i, j] : {std::pair{0, 1}, std::pair{2, 7}, std::pair{4, 9}})
      CHECK(std::abs(pearson(d.X.col(i), d.X.col(j))) < 3.0 * se);
  }
  SECTION("equicorrelation at rho = 0.9") {
    auto d = gen_linreg(100000, 0.9, 13);
    for (auto [i, j] : {std::pair{0, 1}, std::pair{3, 8}}) {
      const double r = pearson(d.X.col(i), d.X.col(j));
      // se of a correlation estimate ~ (1-rho^2)/sqrt(N)
      CHECK(std::abs(r - 0.9) < 3.0 * (1.0 - 0.81) / std::sqrt(1e5));
    }
  }
  SECTION("noiseless variant has exactly zero residual") {
    auto d = gen_linreg(200, 0.5, 17, true);
    const Eigen::VectorXd res = d.y - d.X * linreg_true_coefficients();
    CHECK(res.cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("deterministic and seed-sensitive") {
    auto a = gen_linreg(50, 0.3, 19), b = gen_linreg(50, 0.3, 19), c = gen_linreg(50, 0.3, 23);
    CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.X - c.X).cwiseAbs().maxCoeff() > 0.0);
  }
  CHECK_THROWS_AS(gen_linreg(100, 1.0, 1), std::invalid_argument);
}

TEST_CASE("gaussian copula uniforms") {
  SECTION("identity Spearman gives independent uniform marginals") {
    Eigen::MatrixXd U = gaussian_copula_uniform(100000, Eigen::MatrixXd::Identity(4, 4), 29);
    for (int j = 0; j < 4; ++j) {
      Eigen::VectorXd col = U.col(j);
      std::sort(col.data(), col.data() + col.size());
      const auto n = static_cast<double>(col.size());
      double d = 0.0;
      for (long i = 0; i < col.size(); ++i)
        d = std::max(d, std::max(std::abs(col[i] - (i + 1.0) / n), std::abs(col[i] - i / n)));
      CHECK(d * std::sqrt(n) < 1.628);  // KS at alpha = 0.01
    }
    CHECK(std::abs(pearson(U.col(0), U.col(1))) < 0.01);
  }
  SECTION("hits the target Spearman within 0.02") {
    Eigen::MatrixXd S(3, 3);
    S << 1.0, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0;
    Eigen::MatrixXd U = gaussian_copula_uniform(100000, S, 31);
    CHECK(std::abs(spearman(U.col(0), U.col(1)) - 0.5) < 0.02);
    CHECK(std::abs(spearman(U.col(0), U.col(2)) - 0.25) < 0.02);
  }
  SECTION("mapped Pearson value for S = 0.5") {
    CHECK(2.0 * std::sin(M_PI * 0.5 / 6.0) == Catch::Approx(0.51763809).epsilon(1e-7));
  }
  SECTION("non positive definite target is reported with an eigenvalue") {
    Eigen::MatrixXd S = Eigen::MatrixXd::Constant(3, 3, 0.99);
    S.diagonal().setOnes();
    S(0, 1) = S(1, 0) = -0.99;
    try {
      gaussian_copula_uniform(10, S, 1);
      FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("eig") != std::string::npos);
    }
  }
}

TEST_CASE("friedman generator") {
  SECTION("hand value at the center point") {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(10, 0.5);
    CHECK(friedman_mean(x) ==
          Catch::Approx(10.0 * std::sin(M_PI * 0.25) + 5.0 + 2.5).epsilon(1e-12));
    CHECK(friedman_mean(x) == Catch::Approx(14.5710678).epsilon(1e-7));
  }
  SECTION("x3 = 0.5 kills the quadratic term") {
    Eigen::VectorXd x(10);
    x << 0.2, 0.7, 0.5, 0.1, 0.9, 0, 0, 0, 0, 0;
    Eigen::VectorXd x2 = x;
    const double base = friedman_mean(x);
    x2[2] = 0.5;
    CHECK(friedman_mean(x2) == base);  // already at 0.5
    x2[2] = 0.8;
    CHECK(friedman_mean(x2) == Catch::Approx(base + 20.0 * 0.09).epsilon(1e-12));
  }
  SECTION("nuisance covariates never enter") {
    Rng rng(37);
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(10, [&](int) { return rng.uniform(); });
      Eigen::VectorXd xp = x;
      std::swap(xp[5], xp[9]);
      std::swap(xp[6], xp[8]);
      CHECK(friedman_mean(x) == friedman_mean(xp));
    }
  }
  SECTION("signal-to-noise ratio near 4.8") {
    auto d = gen_friedman(1000000, false, nullptr, 41, true);  // noiseless: y is f
    const double var_f = (d.y.array() - d.y.mean()).square().sum() / (d.n() - 1.0);
    CHECK(std::sqrt(var_f) == Catch::Approx(4.8).epsilon(0.05));
  }
  SECTION("correlated covariates keep uniform marginals") {
    auto d = gen_friedman(50000, true, nullptr, 43);
    CHECK(d.X.minCoeff() > 0.0);
    CHECK(d.X.maxCoeff() < 1.0);
    CHECK(std::abs(d.X.col(0).mean() - 0.5) < 0.01);
    CHECK(spearman(d.X.col(0), d.X.col(1)) > 0.4);
  }
}

TEST_CASE("split and standardization") {
  auto d = gen_linreg(4177, 0.2, 47);
  split(d, 0.8, 5);
  CHECK(d.train_idx.size() == 3341);
  CHECK(d.test_idx.size() == 836);
  std::vector<int> seen(4177, 0);
  for (int i : d.train_idx) seen[i]++;
  for (int i : d.test_idx) seen[i]++;
  for (int s : seen) CHECK(s == 1);

  standardize(d);
  const Eigen::MatrixXd Xtr = d.train_X();
  for (int j = 0; j < d.p(); ++j) {
    CHECK(std::abs(Xtr.col(j).mean()) < 1e-12);
    const double sd = std::sqrt((Xtr.col(j).array() - Xtr.col(j).mean()).square().sum() /
                                (Xtr.rows() - 1.0));
    CHECK(sd == Catch::Approx(1.0).margin(1e-12));
  }
  const Eigen::VectorXd ytr = d.train_y();
  CHECK(std::abs(ytr.mean()) < 1e-12);
}

TEST_CASE("csv round trip and error taxonomy") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "dsm_csv_test";
  fs::create_directories(dir);

  SECTION("write then load reproduces the values bitwise") {
    auto d = gen_friedman(60, false, nullptr, 51);
    const auto path = (dir / "roundtrip.csv").string();
    save_csv(path, d, "y", "config_hash=deadbeef seed=51");
    CsvSchema schema;
    schema.target = "y";
    auto d2 = load_csv(path, schema);
    REQUIRE(d2.n() == d.n());
    REQUIRE(d2.p() == d.p());
    CHECK((d.X - d2.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((d.y - d2.y).cwiseAbs().maxCoeff() == 0.0);
    CHECK(d2.feature_names == d.feature_names);
  }
  SECTION("categorical encoding") {
    const auto path = (dir / "cat.csv").string();
    std::ofstream out(path);
    out << "sex,len,rings\nI,1.0,5\nF,2.0,7\nM,3.0,9\n";
    out.close();
    CsvSchema schema;
    schema.target = "rings";
    schema.categorical["sex"] = {{"I", 0.0}, {"F", 1.0}, {"M", 2.0}};
    auto d = load_csv(path, schema);
    CHECK(d.X(0, 0) == 0.0);
    CHECK(d.X(1, 0) == 1.0);
    CHECK(d.X(2, 0) == 2.0);
    CHECK(d.y[2] == 9.0);
  }
  SECTION("distinct errors") {
    const auto empty_path = (dir / "empty.csv").string();
    std::ofstream(empty_path).close();
    CsvSchema schema;
    schema.target = "y";
    CHECK_THROWS_AS(load_csv(empty_path, schema), EmptyFileError);

    const auto missing_path = (dir / "missing.csv").string();
    std::ofstream(missing_path) << "a,b\n1,2\n";
    CHECK_THROWS_AS(load_csv(missing_path, schema), MissingColumnError);

    const auto bad_path = (dir / "bad.csv").string();
    std::ofstream(bad_path) << "a,y\n1,2\nfoo,3\n";
    CHECK_THROWS_AS(load_csv(bad_path, schema), NonNumericCellError);
  }
}
