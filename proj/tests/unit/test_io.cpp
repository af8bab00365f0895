#include "lscggm/io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

using namespace lscggm;
using oracle::TestRng;
namespace fs = std::filesystem;

namespace {

class TempDir {
  public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("lscggm_io_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path &path() const { return path_; }

  private:
    fs::path path_;
};

} // namespace

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1.0), "1");
    EXPECT_EQ(format_double(-2.5e-300), "-2.5e-300");
    TestRng rng(1);
    for (int k = 0; k < 1000; ++k) {
        const double v = rng.normal() * std::pow(10.0, rng.integer(-20, 20));
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
}

TEST(Csv, MatrixRoundTripIsExact) {
    TempDir dir;
    TestRng rng(2);
    const Matrix a = rng.gaussian(7, 3);
    write_csv_matrix(dir.path() / "a.csv", a);
    EXPECT_EQ(read_csv_matrix(dir.path() / "a.csv"), a);

    write_csv_matrix(dir.path() / "empty.csv", Matrix(0, 0));
    EXPECT_EQ(read_csv_matrix(dir.path() / "empty.csv").size(), 0);
}

TEST(Csv, RejectsRaggedAndNonNumeric) {
    TempDir dir;
    {
        std::ofstream(dir.path() / "ragged.csv") << "1,2\n3\n";
        std::ofstream(dir.path() / "text.csv") << "1,x\n";
    }
    EXPECT_THROW(read_csv_matrix(dir.path() / "ragged.csv"), std::invalid_argument);
    EXPECT_THROW(read_csv_matrix(dir.path() / "text.csv"), std::invalid_argument);
    EXPECT_THROW(read_csv_matrix(dir.path() / "missing.csv"), std::exception);
}

TEST(Json, CovarianceAndParamsRoundTrip) {
    TestRng rng(3);
    const auto cov = oracle::random_covariance(rng, 3, 2, 40);
    const auto back = covariance_from_json(to_json(cov));
    EXPECT_EQ(back.sigma_z(), cov.sigma_z());
    EXPECT_EQ(back.sigma_x(), cov.sigma_x());
    EXPECT_EQ(back.sigma_zx(), cov.sigma_zx());
    EXPECT_EQ(back.n(), cov.n());

    const auto params = oracle::random_feasible_params(rng, 3, 2, 1);
    const auto pb = params_from_json(to_json(params));
    EXPECT_EQ(pb.s(), params.s());
    EXPECT_EQ(pb.l(), params.l());

    // Inputs-free shapes survive.
    const auto no_inputs = oracle::random_feasible_params(rng, 2, 0, 1);
    EXPECT_EQ(params_from_json(to_json(no_inputs)).m(), 0);
}

TEST(Json, FitResultCarriesTheDocumentedKeys) {
    TestRng rng(4);
    const auto cov = oracle::random_covariance(rng, 3, 1, 30);
    PenaltyConfig pen;
    pen.lambda = 0.2;
    const auto r = fit(cov, pen, SolverOptions{});
    const auto j = to_json(r);
    for (const char *key : {"s_x", "l_x", "s_zx", "l_zx", "objective", "iterations", "rank_l",
                            "converged", "primal_residuals", "dual_residuals"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["iterations"].get<int>(), r.iterations);
    EXPECT_EQ(matrix_from_json(j["s_x"]), r.params.s_x());
}

TEST(Json, DesignRoundTrip) {
    SimulationDesign d;
    d.p = 16;
    d.n = 1234;
    d.d_z = 3;
    d.d_h = 1;
    d.seed = 0xFFFFFFFFFFFFULL;
    d.replicate = 4;
    d.effect.mxh_scale = 2.0;
    const auto back = design_from_json(to_json(d));
    EXPECT_EQ(to_json(back), to_json(d));
    EXPECT_EQ(back.seed, d.seed);
    EXPECT_EQ(back.effect.mxh_scale, 2.0);
}

TEST(Json, NonFiniteValuesBecomeNull) {
    Matrix a(1, 2);
    a << std::numeric_limits<double>::quiet_NaN(), 1.5;
    EXPECT_EQ(matrix_to_json(a).dump(), "[[null,1.5]]");
}

TEST(Dataset, SaveLoadRoundTrip) {
    TempDir dir;
    SimulationDesign d;
    d.p = 4;
    d.n = 30;
    d.seed = 8;
    const auto ds = sample_dataset(d);
    save_dataset(dir.path() / "ds", ds);
    for (const char *f : {"design.json", "data_z.csv", "data_x.csv", "truth/m_x.csv",
                          "truth/m_xh.csv", "truth/m_h.csv", "truth/m_zx.csv", "truth/m_zh.csv",
                          "truth/s_star.csv", "truth/l_star.csv"})
        EXPECT_TRUE(fs::exists(dir.path() / "ds" / f)) << f;

    const auto loaded = load_dataset(dir.path() / "ds");
    EXPECT_EQ(loaded.data_x, ds.data_x);
    EXPECT_EQ(loaded.data_z, ds.data_z);
    ASSERT_TRUE(loaded.truth.has_value());
    EXPECT_EQ(loaded.truth->m_x, ds.truth.m_x);
    EXPECT_EQ(loaded.truth->m_zh, ds.truth.m_zh);
    ASSERT_TRUE(loaded.marginal_truth.has_value());
    const auto marg = marginalize_ground_truth(ds.truth);
    EXPECT_EQ(loaded.marginal_truth->s_star, marg.s_star);
    EXPECT_EQ(loaded.marginal_truth->l_star, marg.l_star);
    ASSERT_TRUE(loaded.design.has_value());
    EXPECT_EQ(loaded.design->seed, 8u);
}

TEST(Dataset, OutputsOnlyDirectory) {
    TempDir dir;
    TestRng rng(5);
    const Matrix x = rng.gaussian(12, 3);
    write_csv_matrix(dir.path() / "data_x.csv", x);
    const auto loaded = load_dataset(dir.path());
    EXPECT_EQ(loaded.data_x, x);
    EXPECT_EQ(loaded.data_z.rows(), 12);
    EXPECT_EQ(loaded.data_z.cols(), 0);
    EXPECT_FALSE(loaded.truth.has_value());
    EXPECT_THROW(load_dataset(dir.path() / "nowhere"), std::exception);
}
