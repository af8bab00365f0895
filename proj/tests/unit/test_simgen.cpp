#include "lscggm/rng.hpp"
#include "lscggm/simgen.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <set>

using namespace lscggm;

namespace {

int nonzeros(const Eigen::Ref<const Vector> &v) {
    return static_cast<int>((v.array().abs() > 0).count());
}

int exact_rank(const Matrix &a) {
    Eigen::JacobiSVD<Matrix> svd(a);
    return static_cast<int>((svd.singularValues().array() > 1e-10).count());
}

Matrix pearson(const Matrix &a, const Matrix &b) {
    const Matrix ac = a.rowwise() - a.colwise().mean();
    const Matrix bc = b.rowwise() - b.colwise().mean();
    const Vector sa = ac.colwise().norm(), sb = bc.colwise().norm();
    return sa.cwiseInverse().asDiagonal() * (ac.transpose() * bc) * sb.cwiseInverse().asDiagonal();
}

} // namespace

TEST(ChainPattern, TenOutputs) {
    const std::vector<std::pair<int, int>> expected = {{2, 1}, {3, 2}, {4, 3}, {6, 5},
                                                       {7, 6}, {8, 7}, {9, 8}};
    EXPECT_EQ(chain_pattern(10), expected);
}

TEST(ChainPattern, FourOutputsKeepEveryLink) {
    const std::vector<std::pair<int, int>> expected = {{2, 1}, {3, 2}, {4, 3}};
    EXPECT_EQ(chain_pattern(4), expected);
}

TEST(ChainPattern, ThirtyTwoOutputsByEnumeration) {
    int count = 0;
    for (int i = 2; i <= 32; ++i)
        count += i % 5 != 0;
    EXPECT_EQ(count, 25);
    EXPECT_EQ(chain_pattern(32).size(), 25u);
    EXPECT_THROW(chain_pattern(1), std::invalid_argument);
}

TEST(GroundTruth, InvariantsHoldForEveryDesign) {
    for (int p : {2, 4, 8, 16, 32}) {
        SimulationDesign d;
        d.p = p;
        for (d.d_z = 0; d.d_z <= d.log2_p(); ++d.d_z)
            for (d.d_h = 0; d.d_h <= d.log2_p(); ++d.d_h) {
                const auto g = make_ground_truth(d);
                const auto marg = marginalize_ground_truth(g);
                const int h = 1 << d.d_h, groups = 1 << d.d_z;
                ASSERT_EQ(g.h(), h);
                EXPECT_EQ(exact_rank(marg.l_star.topRows(p)), h) << p << " " << d.d_h;
                EXPECT_EQ(exact_rank(g.m_zx), groups);
                for (int i = 0; i < p; ++i) {
                    EXPECT_EQ(nonzeros(g.m_zx.row(i).transpose()), p / groups);
                    EXPECT_EQ(nonzeros(g.m_zx.col(i)), p / groups);
                    // Each output touches exactly one confounder.
                    EXPECT_EQ(nonzeros(g.m_xh.row(i).transpose()), 1);
                }
                for (int c = 0; c < h; ++c)
                    EXPECT_EQ(nonzeros(g.m_xh.col(c)), p / h);
                EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(g.joint_precision())
                              .eigenvalues()
                              .minCoeff(),
                          0.0);
                EXPECT_TRUE(g.m_zh.isZero(0.0));
            }
    }
}

TEST(GroundTruth, ChainSupportAndMagnitudes) {
    SimulationDesign d;
    d.p = 16;
    const auto g = make_ground_truth(d);
    std::set<std::pair<int, int>> chain;
    for (auto [i, j] : chain_pattern(16))
        chain.insert({i - 1, j - 1});
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < i; ++j) {
            if (chain.count({i, j}))
                EXPECT_DOUBLE_EQ(std::abs(g.m_x(i, j)), 0.4);
            else
                EXPECT_EQ(g.m_x(i, j), 0.0);
            EXPECT_EQ(g.m_x(i, j), g.m_x(j, i));
        }
    const double a = 1.0 / std::sqrt(4.0);
    for (int i = 0; i < 16; ++i)
        EXPECT_DOUBLE_EQ(std::abs(g.m_xh(i, i / 4)), a);
}

TEST(GroundTruth, ThirtyTwoOutputsFourConfounders) {
    SimulationDesign d;
    d.p = 32;
    d.d_h = 2;
    const auto g = make_ground_truth(d);
    ASSERT_EQ(g.h(), 4);
    for (int c = 0; c < 4; ++c)
        EXPECT_EQ(nonzeros(g.m_xh.col(c)), 8);
}

TEST(GroundTruth, EightOutputsTwoInputGroups) {
    SimulationDesign d;
    d.p = 8;
    d.d_z = 1;
    const auto g = make_ground_truth(d);
    EXPECT_EQ(exact_rank(g.m_zx), 2);
    for (int i = 0; i < 8; ++i) {
        EXPECT_EQ(nonzeros(g.m_zx.row(i).transpose()), 4);
        EXPECT_EQ(nonzeros(g.m_zx.col(i)), 4);
    }
}

TEST(GroundTruth, NoConfoundingWhenEveryOutputHasItsOwnLatent) {
    SimulationDesign d;
    d.p = 8;
    d.d_h = 3;
    const auto g = make_ground_truth(d);
    EXPECT_EQ(exact_rank(marginalize_ground_truth(g).l_star.topRows(8)), 8);
    // One-to-one: a scaled signed permutation.
    const Matrix gram = g.m_xh.transpose() * g.m_xh;
    EXPECT_TRUE(gram.isApprox(gram.diagonal().asDiagonal().toDenseMatrix(), 1e-14));
}

TEST(GroundTruth, RejectsInvalidDesigns) {
    SimulationDesign d;
    d.p = 12;
    EXPECT_THROW(make_ground_truth(d), std::invalid_argument);
    d.p = 8;
    d.d_z = 4;
    EXPECT_THROW(make_ground_truth(d), std::invalid_argument);
    d.d_z = 1;
    d.effect.diag_boost = 0.0;
    EXPECT_THROW(make_ground_truth(d), std::invalid_argument);
}

TEST(SampleDataset, DeterministicGivenSeed) {
    SimulationDesign d;
    d.p = 8;
    d.n = 200;
    d.seed = 99;
    const auto a = sample_dataset(d), b = sample_dataset(d);
    EXPECT_EQ(a.data_x, b.data_x);
    EXPECT_EQ(a.data_z, b.data_z);
    EXPECT_EQ(a.truth.m_x, b.truth.m_x);
    d.replicate = 1;
    const auto c = sample_dataset(d);
    EXPECT_NE(a.data_x, c.data_x);
}

TEST(SampleDataset, DecoupledModelHasIndependentColumns) {
    SimulationDesign d;
    d.p = 4;
    d.n = 10000;
    d.effect.sx_offdiag = 0.0;
    d.effect.mxh_scale = 0.0;
    d.effect.mzx_scale = 0.0;
    d.effect.diag_boost = 0.5;
    const auto ds = sample_dataset(d);
    const Matrix corr_xz = pearson(ds.data_x, ds.data_z);
    EXPECT_LT(corr_xz.cwiseAbs().maxCoeff(), 0.05);
    const Matrix corr_xx = pearson(ds.data_x, ds.data_x);
    EXPECT_LT((corr_xx - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.05);
    const Vector var = ds.data_x.colwise().squaredNorm() / static_cast<double>(d.n);
    for (int j = 0; j < 4; ++j)
        EXPECT_NEAR(var(j), 2.0, 0.1);
}

TEST(SampleDataset, ResidualCovarianceMatchesMarginalModel) {
    SimulationDesign d;
    d.p = 4;
    d.d_h = 0;
    d.n = 100000;
    d.seed = 5;
    const auto ds = sample_dataset(d);
    ASSERT_EQ(ds.truth.h(), 1);
    // OLS of X on Z, then the residual covariance.
    const Matrix b = ds.data_z.colPivHouseholderQr().solve(ds.data_x);
    const Matrix resid = ds.data_x - ds.data_z * b;
    const Matrix emp = resid.transpose() * resid / static_cast<double>(d.n);
    const auto marg = marginalize_ground_truth(ds.truth);
    const Matrix model = (marg.s_star.topRows(4) - marg.l_star.topRows(4)).inverse();
    EXPECT_LT((emp - model).norm() / model.norm(), 0.03);
    // Independent route: the X block of the inverse joint precision.
    const Matrix joint_inv = ds.truth.joint_precision().inverse();
    EXPECT_TRUE(joint_inv.topLeftCorner(4, 4).isApprox(model, 1e-10));
}

TEST(SampleDataset, SecondMomentsConverge) {
    SimulationDesign d;
    d.p = 4;
    d.d_z = 1;
    d.d_h = 1;
    d.n = 100000;
    d.seed = 11;
    const auto ds = sample_dataset(d);
    const auto cov = sample_covariances(ds.data_z, ds.data_x);
    const auto marg = marginalize_ground_truth(ds.truth);
    const Matrix r_x = marg.s_star.topRows(4) - marg.l_star.topRows(4);
    const Matrix r_zx = marg.s_star.bottomRows(4) - marg.l_star.bottomRows(4);
    const Matrix sigma_x_given = r_x.inverse();
    const Matrix coef = -r_zx * sigma_x_given; // E[X | z]ᵀ = zᵀ coef
    const Matrix sz = Matrix::Identity(4, 4);
    Matrix joint(8, 8);
    joint.topLeftCorner(4, 4) = sz;
    joint.topRightCorner(4, 4) = sz * coef;
    joint.bottomLeftCorner(4, 4) = coef.transpose() * sz;
    joint.bottomRightCorner(4, 4) = sigma_x_given + coef.transpose() * sz * coef;
    EXPECT_LT((cov.joint() - joint).norm() / joint.norm(), 0.05);
}

TEST(CounterRng, UniformAndNormalMoments) {
    auto rng = CounterRng::stream(7, "test");
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0, st2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
        const double t = rng.student_t4();
        st2 += t * t;
    }
    EXPECT_NEAR(su / n, 0.5, 0.005);
    EXPECT_NEAR(sn / n, 0.0, 0.01);
    EXPECT_NEAR(sn2 / n, 1.0, 0.02);
    EXPECT_NEAR(st2 / n, 2.0, 0.2);
}

TEST(CounterRng, StreamsAreReproducibleAndDistinct) {
    auto a = CounterRng::stream(1, "data", 0), b = CounterRng::stream(1, "data", 0);
    auto c = CounterRng::stream(1, "data", 1), e = CounterRng::stream(1, "truth", 0);
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
    EXPECT_NE(x, e.next_u64());
    EXPECT_EQ(a.counter(), 1u);
}

TEST(CounterRng, BelowStaysInRangeAndCoversIt) {
    CounterRng rng(123);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto v = rng.below(7);
        ASSERT_LT(v, 7u);
        ++hits[v];
    }
    for (int h : hits)
        EXPECT_GT(h, 850);
}

TEST(CounterRng, SplitmixKnownValue) {
    // The finaliser applied to one golden-ratio step equals the first output
    // of the reference splitmix64 generator seeded with 0.
    EXPECT_EQ(splitmix64(0x9e3779b97f4a7c15ULL), 0xe220a8397b1dcdafULL);
}
