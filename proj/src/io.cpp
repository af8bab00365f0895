#include "lscggm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lscggm {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Matrix read_csv_matrix(const fs::path &path) {
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t");
            const auto e = cell.find_last_not_of(" \t");
            if (b == std::string::npos)
                throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                            ": empty cell");
            const char *first = cell.data() + b;
            const char *last = cell.data() + e + 1;
            if (*first == '+')
                ++first;
            double v = 0.0;
            auto res = std::from_chars(first, last, v);
            if (res.ec != std::errc() || res.ptr != last)
                throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                            ": not a number: '" + cell + "'");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                        ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        return Matrix(0, 0);
    Matrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            a(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return a;
}

void write_csv_matrix(const fs::path &path, const Matrix &a) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (j)
                f << ',';
            f << format_double(a(i, j));
        }
        f << '\n';
    }
    if (!f)
        throw std::runtime_error("failed writing '" + path.string() + "'");
}

json matrix_to_json(const Matrix &a) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            row.push_back(a(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json &j, Eigen::Index cols) {
    require(j.is_array(), "matrix must be a JSON array of rows");
    if (j.empty())
        return Matrix(0, cols);
    const auto n_rows = static_cast<Eigen::Index>(j.size());
    const auto n_cols = static_cast<Eigen::Index>(j[0].size());
    Matrix a(n_rows, n_cols);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
        const auto &row = j[static_cast<std::size_t>(r)];
        require(row.is_array() && static_cast<Eigen::Index>(row.size()) == n_cols,
                "matrix rows must have equal length");
        for (Eigen::Index c = 0; c < n_cols; ++c)
            a(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return a;
}

json to_json(const CovarianceTriple &cov) {
    return {{"n", cov.n()},
            {"m", cov.m()},
            {"p", cov.p()},
            {"sigma_z", matrix_to_json(cov.sigma_z())},
            {"sigma_x", matrix_to_json(cov.sigma_x())},
            {"sigma_zx", matrix_to_json(cov.sigma_zx())}};
}

CovarianceTriple covariance_from_json(const json &j) {
    const int p = j.at("p").get<int>();
    const int m = j.at("m").get<int>();
    CovarianceTriple cov(matrix_from_json(j.at("sigma_z"), m), matrix_from_json(j.at("sigma_x"), p),
                         matrix_from_json(j.at("sigma_zx"), p), j.at("n").get<long>());
    require(cov.m() == m && cov.p() == p, "covariance JSON dimensions disagree with m, p");
    return cov;
}

json to_json(const DecomposedParams &params) {
    return {{"s_x", matrix_to_json(params.s_x())},
            {"l_x", matrix_to_json(params.l_x())},
            {"s_zx", matrix_to_json(params.s_zx())},
            {"l_zx", matrix_to_json(params.l_zx())}};
}

DecomposedParams params_from_json(const json &j) {
    const Matrix s_x = matrix_from_json(j.at("s_x"));
    const auto p = s_x.cols();
    return DecomposedParams(s_x, matrix_from_json(j.at("l_x"), p),
                            matrix_from_json(j.at("s_zx"), p), matrix_from_json(j.at("l_zx"), p));
}

namespace {

/// NaN is not representable in JSON; it becomes null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json doubles(const std::vector<double> &v) {
    json out = json::array();
    for (double x : v)
        out.push_back(number_or_null(x));
    return out;
}

json optional_number(const std::optional<double> &v) {
    return v ? json(*v) : json(nullptr);
}

json inclusion_to_json(const InclusionMap &m) {
    json out = json::array();
    for (const auto &[e, prob] : m)
        out.push_back({{"i", e.first}, {"j", e.second}, {"prob", prob}});
    return out;
}

} // namespace

json to_json(const FitResult &r) {
    json j = to_json(r.params);
    j["objective"] = number_or_null(r.objective);
    j["iterations"] = r.iterations;
    j["rank_l"] = r.rank_l;
    j["converged"] = r.converged;
    j["inner_converged"] = r.inner_converged;
    j["primal_residuals"] = doubles(r.primal_residuals);
    j["dual_residuals"] = doubles(r.dual_residuals);
    j["inner_iteration_counts"] = r.inner_iteration_counts;
    j["tol_primal"] = r.tol_primal;
    j["tol_dual"] = r.tol_dual;
    j["rho_final"] = r.state.rho;
    return j;
}

json to_json(const KktReport &k) {
    return {{"sparse_support", k.sparse_support},
            {"sparse_offsupport", k.sparse_offsupport},
            {"nuclear_norm_bound", k.nuclear_norm_bound},
            {"nuclear_alignment", k.nuclear_alignment},
            {"psd_multiplier", k.psd_multiplier},
            {"worst", k.worst()}};
}

json to_json(const RecoveryReport &r) {
    return {{"precision", optional_number(r.precision)},
            {"recall", optional_number(r.recall)},
            {"auc", optional_number(r.auc)},
            {"sign_consistent", r.sign_consistent},
            {"rank_consistent", r.rank_consistent},
            {"err_s_inf_over_gamma", r.err_s_inf_over_gamma},
            {"err_l_spectral", r.err_l_spectral}};
}

json to_json(const EdgeSet &e) {
    json edges = json::array();
    for (auto [i, j] : e.edges())
        edges.push_back({i, j});
    return {{"p", e.p()}, {"edges", edges}};
}

json to_json(const IdentifiabilityReport &r) {
    return {{"xi", r.xi},
            {"mu", r.mu},
            {"mu_is_exact", r.mu_is_exact},
            {"product_bound_ok", r.product_bound_ok},
            {"gamma_low", r.gamma_low},
            {"gamma_high", r.gamma_high},
            {"c_const", r.c_const}};
}

json to_json(const TheoremQuantities &t) {
    return {{"psi_z", t.psi_z},
            {"psi_x_star", t.psi_x_star},
            {"phi_zx_star", t.phi_zx_star},
            {"psi", t.psi},
            {"w", t.w},
            {"big_m", t.big_m},
            {"lambda_n", t.lambda_n},
            {"q_constants", t.q_constants},
            {"n_required", number_or_null(t.n_required)},
            {"sigma_min", t.sigma_min},
            {"sigma_threshold", t.sigma_threshold},
            {"theta_min", t.theta_min},
            {"theta_threshold", t.theta_threshold},
            {"error_bound", t.error_bound}};
}

json to_json(const StabilityResult &r) {
    json per = json::array();
    for (const auto &pw : r.per_lambda)
        per.push_back({{"lambda", pw.lambda},
                       {"q_avg", pw.q_avg},
                       {"tau", pw.threshold.tau},
                       {"tau_infeasible", pw.threshold.infeasible},
                       {"inclusion_prob", inclusion_to_json(pw.inclusion_prob)},
                       {"stable_edges", to_json(pw.stable_edges)}});
    return {{"inclusion_prob", inclusion_to_json(r.inclusion_prob)},
            {"q_avg", r.q_avg},
            {"tau", r.tau},
            {"tau_infeasible", r.tau_infeasible},
            {"lambda_prefix", r.lambda_prefix},
            {"stable_edges", to_json(r.stable_edges)},
            {"pairs_used", r.pairs_used},
            {"skipped_pairs", r.skipped_pairs},
            {"per_lambda", per}};
}

json to_json(const SdpProblem &p) {
    json blocks = json::array();
    for (const auto &b : p.blocks)
        blocks.push_back({{"name", b.name},
                          {"size", b.size},
                          {"kind", b.kind == BlockKind::psd ? "psd" : "diagonal"}});
    json cons = json::array();
    for (const auto &c : p.constraints)
        cons.push_back({{"role", c.role}, {"rhs", c.rhs}});
    json entries = json::array();
    for (const auto &e : p.entries)
        entries.push_back({e.constraint, e.block, e.i, e.j, e.value});
    const auto &md = p.metadata;
    return {{"metadata",
             {{"m", md.m},
              {"p", md.p},
              {"lambda", md.lambda},
              {"gamma", md.gamma},
              {"epsilon", md.epsilon},
              {"parametrisation", md.parametrisation},
              {"penalize_diagonal", md.penalize_diagonal}}},
            {"convention", "maximise <C,X> s.t. <A_k,X> = b_k, X psd; C = -(cost)"},
            {"logdet", {{"block", p.logdet_block}, {"weight", p.logdet_weight}}},
            {"blocks", blocks},
            {"constraints", cons},
            {"entries", entries}};
}

json to_json(const EffectSizeConfig &e) {
    return {{"sx_offdiag", e.sx_offdiag},
            {"mxh_scale", e.mxh_scale},
            {"mzx_scale", e.mzx_scale},
            {"diag_boost", e.diag_boost}};
}

json to_json(const SimulationDesign &d) {
    return {{"p", d.p},         {"n", d.n},       {"d_z", d.d_z},
            {"d_h", d.d_h},     {"seed", d.seed}, {"replicate", d.replicate},
            {"effect", to_json(d.effect)}};
}

SimulationDesign design_from_json(const json &j) {
    SimulationDesign d;
    d.p = j.at("p").get<int>();
    d.n = j.at("n").get<long>();
    d.d_z = j.at("d_z").get<int>();
    d.d_h = j.at("d_h").get<int>();
    d.seed = j.at("seed").get<std::uint64_t>();
    d.replicate = j.value("replicate", std::uint64_t{0});
    if (j.contains("effect")) {
        const auto &e = j.at("effect");
        d.effect.sx_offdiag = e.value("sx_offdiag", d.effect.sx_offdiag);
        d.effect.mxh_scale = e.value("mxh_scale", d.effect.mxh_scale);
        d.effect.mzx_scale = e.value("mzx_scale", d.effect.mzx_scale);
        d.effect.diag_boost = e.value("diag_boost", d.effect.diag_boost);
    }
    d.validate();
    return d;
}

json read_json_file(const fs::path &path) {
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    try {
        return json::parse(f);
    } catch (const json::parse_error &e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path &path, const json &j) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    f << j.dump(2) << '\n';
    if (!f)
        throw std::runtime_error("failed writing '" + path.string() + "'");
}

void save_dataset(const fs::path &dir, const SyntheticDataset &ds) {
    fs::create_directories(dir / "truth");
    write_json_file(dir / "design.json", to_json(ds.design));
    const auto &t = ds.truth;
    write_csv_matrix(dir / "truth" / "m_x.csv", t.m_x);
    write_csv_matrix(dir / "truth" / "m_xh.csv", t.m_xh);
    write_csv_matrix(dir / "truth" / "m_h.csv", t.m_h);
    write_csv_matrix(dir / "truth" / "m_zx.csv", t.m_zx);
    write_csv_matrix(dir / "truth" / "m_zh.csv", t.m_zh);
    const auto marg = marginalize_ground_truth(t);
    write_csv_matrix(dir / "truth" / "s_star.csv", marg.s_star);
    write_csv_matrix(dir / "truth" / "l_star.csv", marg.l_star);
    write_csv_matrix(dir / "data_z.csv", ds.data_z);
    write_csv_matrix(dir / "data_x.csv", ds.data_x);
}

LoadedDataset load_dataset(const fs::path &dir) {
    LoadedDataset out;
    require(fs::exists(dir / "data_x.csv"), "dataset '" + dir.string() + "' has no data_x.csv");
    out.data_x = read_csv_matrix(dir / "data_x.csv");
    if (fs::exists(dir / "data_z.csv"))
        out.data_z = read_csv_matrix(dir / "data_z.csv");
    if (out.data_z.size() == 0)
        out.data_z = Matrix(out.data_x.rows(), 0);
    require(out.data_z.rows() == out.data_x.rows(), "data_z and data_x row counts differ");
    if (fs::exists(dir / "design.json"))
        out.design = design_from_json(read_json_file(dir / "design.json"));
    const fs::path truth = dir / "truth";
    if (fs::exists(truth / "s_star.csv") && fs::exists(truth / "l_star.csv"))
        out.marginal_truth =
            MarginalizedTruth{read_csv_matrix(truth / "s_star.csv"),
                              read_csv_matrix(truth / "l_star.csv")};
    if (fs::exists(truth / "m_x.csv")) {
        GroundTruthModel g;
        g.m_x = read_csv_matrix(truth / "m_x.csv");
        g.m_xh = read_csv_matrix(truth / "m_xh.csv");
        g.m_h = read_csv_matrix(truth / "m_h.csv");
        g.m_zx = read_csv_matrix(truth / "m_zx.csv");
        g.m_zh = read_csv_matrix(truth / "m_zh.csv");
        out.truth = g;
    }
    return out;
}

} // namespace lscggm
