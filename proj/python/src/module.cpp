#include "lscggm/admm.hpp"
#include "lscggm/identifiability.hpp"
#include "lscggm/metrics.hpp"
#include "lscggm/sdp.hpp"
#include "lscggm/simgen.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace lscggm;

namespace {

PenaltyConfig make_penalty(double lambda, double gamma, const std::string &parametrisation) {
    PenaltyConfig pen;
    pen.lambda = lambda;
    pen.gamma = gamma;
    if (parametrisation == "raw")
        pen.parametrisation = Parametrisation::raw;
    else if (parametrisation != "ratio01")
        throw std::invalid_argument("parametrisation must be 'ratio01' or 'raw'");
    return pen;
}

Matrix inputs_or_empty(const std::optional<Matrix> &data_z, const Matrix &data_x) {
    return data_z ? *data_z : Matrix(data_x.rows(), 0);
}

py::dict fit_py(const Matrix &data_x, const std::optional<Matrix> &data_z, double lambda,
                double gamma, const std::string &method, const std::string &parametrisation,
                double tol, int max_iter) {
    const auto cov = sample_covariances(inputs_or_empty(data_z, data_x), data_x);
    SolverOptions opts;
    opts.tol_primal = opts.tol_dual = tol;
    opts.max_iter = max_iter;
    opts.record_objective = false;
    MethodFit mf;
    {
        py::gil_scoped_release release;
        mf = fit_method(cov, make_penalty(lambda, gamma, parametrisation), opts,
                        parse_method(method));
    }
    py::dict out;
    out["s_x"] = mf.params.s_x();
    out["l_x"] = mf.params.l_x();
    out["s_zx"] = mf.params.s_zx();
    out["l_zx"] = mf.params.l_zx();
    out["objective"] = mf.fit.objective;
    out["iterations"] = mf.fit.iterations;
    out["converged"] = mf.fit.converged;
    out["rank_l"] = mf.fit.rank_l;
    return out;
}

py::dict simulate_py(int p, long n, int d_z, int d_h, std::uint64_t seed, std::uint64_t replicate,
                     double mxh_scale) {
    SimulationDesign d;
    d.p = p;
    d.n = n;
    d.d_z = d_z;
    d.d_h = d_h;
    d.seed = seed;
    d.replicate = replicate;
    d.effect.mxh_scale = mxh_scale;
    const auto ds = sample_dataset(d);
    const auto marg = marginalize_ground_truth(ds.truth);
    py::dict out;
    out["data_z"] = ds.data_z;
    out["data_x"] = ds.data_x;
    out["s_star"] = marg.s_star;
    out["l_star"] = marg.l_star;
    return out;
}

double pr_auc_py(const std::vector<Matrix> &path, const Matrix &truth_s_x, double tol) {
    std::vector<EdgeSet> sets;
    sets.reserve(path.size());
    for (const auto &s : path)
        sets.push_back(edge_set(s, tol));
    return auc_from_path(sets, edge_set(truth_s_x, tol)).value;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Latent-variable sparse conditional GGM estimation";

    m.attr("METHODS") = py::make_tuple("lscggm", "scggm", "lrps", "glasso");

    m.def("fit", &fit_py, py::arg("data_x"), py::arg("data_z") = py::none(),
          py::arg("lam") = 0.1, py::arg("gamma") = 0.5, py::arg("method") = "lscggm",
          py::arg("parametrisation") = "ratio01", py::arg("tol") = 1e-6,
          py::arg("max_iter") = 2000,
          "Fit one method at one (lambda, gamma); returns the four parameter blocks.");

    m.def(
        "lambda_max",
        [](const Matrix &data_x, const std::optional<Matrix> &data_z, double gamma,
           const std::string &method) {
            const auto cov = sample_covariances(inputs_or_empty(data_z, data_x), data_x);
            PenaltyConfig pen = make_penalty(1.0, gamma, "ratio01");
            return lambda_max(method_covariance(cov, parse_method(method)), pen);
        },
        py::arg("data_x"), py::arg("data_z") = py::none(), py::arg("gamma") = 0.5,
        py::arg("method") = "lscggm", "Smallest lambda at which the sparse estimate has no edges.");

    m.def("simulate", &simulate_py, py::arg("p") = 32, py::arg("n") = 3000, py::arg("d_z") = 2,
          py::arg("d_h") = 2, py::arg("seed") = 1, py::arg("replicate") = 0,
          py::arg("mxh_scale") = 1.0, "Draw one synthetic dataset with its marginal truth.");

    m.def("pr_auc", &pr_auc_py, py::arg("path"), py::arg("truth_s_x"),
          py::arg("tol") = kDefaultEdgeTol, "Area under the precision-recall curve of a path.");

    m.def("xi", &xi_tangent, py::arg("l"), "Tangent-space incoherence of a low-rank matrix.");

    m.def(
        "mu", [](const Matrix &s) { return mu_omega(s).mu; }, py::arg("s"),
        "Support-space spectral bound of a sparse matrix.");

    m.def(
        "gamma_range",
        [](double xi, double mu, double c) {
            const auto g = gamma_range(xi, mu, c);
            return py::make_tuple(g.low, g.high, g.feasible);
        },
        py::arg("xi"), py::arg("mu"), py::arg("c") = 1.0, "(low, high, feasible).");

    m.def(
        "sdp_text",
        [](const Matrix &data_x, const std::optional<Matrix> &data_z, double lambda, double gamma) {
            const auto cov = sample_covariances(inputs_or_empty(data_z, data_x), data_x);
            return to_sdpa_string(build_sdp_problem(cov, make_penalty(lambda, gamma, "ratio01")));
        },
        py::arg("data_x"), py::arg("data_z") = py::none(), py::arg("lam") = 0.1,
        py::arg("gamma") = 0.5, "The penalised problem as SDPA sparse text.");

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
}
