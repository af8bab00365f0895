#include "lscggm/simgen.hpp"

#include "lscggm/rng.hpp"

#include <cmath>
#include <numeric>

namespace lscggm {

void EffectSizeConfig::validate() const {
    require(sx_offdiag >= 0 && mxh_scale >= 0 && mzx_scale >= 0,
            "effect sizes must be nonnegative");
    require(diag_boost > 0, "diag_boost must be positive");
}

int SimulationDesign::log2_p() const {
    int k = 0;
    while ((1 << k) < p)
        ++k;
    return k;
}

void SimulationDesign::validate() const {
    require(p >= 2 && (p & (p - 1)) == 0, "p must be a power of two (>= 2)");
    require(n >= 1, "n must be positive");
    const int k = log2_p();
    require(d_z >= 0 && d_z <= k, "d_z must lie in [0, log2 p]");
    require(d_h >= 0 && d_h <= k, "d_h must lie in [0, log2 p]");
    effect.validate();
}

std::vector<std::pair<int, int>> chain_pattern(int p) {
    require(p >= 2, "chain_pattern needs p >= 2");
    std::vector<std::pair<int, int>> pairs;
    for (int i = 2; i <= p; ++i)
        if (i % 5 != 0)
            pairs.emplace_back(i, i - 1);
    return pairs;
}

namespace {

std::vector<int> permutation(CounterRng &rng, int size) {
    std::vector<int> perm(size);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = size - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    return perm;
}

} // namespace

GroundTruthModel make_ground_truth(const SimulationDesign &design) {
    design.validate();
    const int p = design.p;
    const int m = p;
    const int h = 1 << design.d_h;
    const int groups_z = 1 << design.d_z;
    const auto &eff = design.effect;
    CounterRng rng = CounterRng::stream(design.seed, "truth", design.replicate);

    GroundTruthModel g;
    g.m_x = Matrix::Zero(p, p);
    for (auto [i, j] : chain_pattern(p)) {
        const double v = eff.sx_offdiag * rng.sign();
        g.m_x(i - 1, j - 1) = v;
        g.m_x(j - 1, i - 1) = v;
    }

    const int per_h = p / h;
    const double a = eff.mxh_scale / std::sqrt(static_cast<double>(per_h));
    g.m_xh = Matrix::Zero(p, h);
    for (int i = 0; i < p; ++i)
        g.m_xh(i, i / per_h) = a * rng.sign();

    g.m_h = Matrix::Zero(h, h);
    for (int c = 0; c < h; ++c)
        g.m_h(c, c) = g.m_xh.col(c).cwiseAbs().sum() + eff.diag_boost;
    for (int i = 0; i < p; ++i)
        g.m_x(i, i) = g.m_x.row(i).cwiseAbs().sum() + g.m_xh.row(i).cwiseAbs().sum() +
                      eff.diag_boost;

    // Inputs and outputs are split into 2^d_z groups (after independent
    // random permutations); group k of inputs feeds group k of outputs
    // through a constant block, so rank = 2^d_z and every row and column
    // has p/2^d_z nonzeros.
    const int per_z = p / groups_z;
    const double b = eff.mzx_scale * groups_z / static_cast<double>(p);
    const auto perm_in = permutation(rng, m);
    const auto perm_out = permutation(rng, p);
    g.m_zx = Matrix::Zero(m, p);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < p; ++c)
            if (r / per_z == c / per_z)
                g.m_zx(perm_in[r], perm_out[c]) = b;

    g.m_zh = Matrix::Zero(m, h);
    return g;
}

SyntheticDataset sample_dataset(const SimulationDesign &design) {
    SyntheticDataset ds;
    ds.design = design;
    ds.truth = make_ground_truth(design);
    const auto &g = ds.truth;
    const int p = g.p(), m = g.m(), h = g.h();
    const long n = design.n;

    CounterRng rng = CounterRng::stream(design.seed, "data", design.replicate);
    const double t4_sd = std::sqrt(2.0);
    ds.data_z.resize(n, m);
    for (long i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            ds.data_z(i, j) = rng.student_t4() / t4_sd;

    Matrix noise(n, p + h);
    for (long i = 0; i < n; ++i)
        for (int j = 0; j < p + h; ++j)
            noise(i, j) = rng.normal();

    // J = LLᵀ. A row w = −J⁻¹c + L⁻ᵀε has mean −J⁻¹c and covariance J⁻¹.
    const Matrix j = g.joint_precision();
    Eigen::LLT<Matrix> llt(j);
    if (llt.info() != Eigen::Success)
        throw DomainError("joint (X, H) precision is not positive definite");
    Matrix c(n, p + h);
    c.leftCols(p) = ds.data_z * g.m_zx;
    c.rightCols(h) = ds.data_z * g.m_zh;
    const Matrix mean_t = -llt.solve(c.transpose());
    const Matrix dev_t = llt.matrixU().solve(noise.transpose());
    ds.data_x = (mean_t + dev_t).transpose().leftCols(p);
    return ds;
}

} // namespace lscggm
