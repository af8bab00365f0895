// lscggm: batch front end for simulation, fitting, paths, stability
// selection, diagnostics, SDP export and method comparison.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure (a
// diagnostics.json is written next to the other outputs).

#include "lscggm/experiment.hpp"
#include "lscggm/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace lscggm;

namespace {

constexpr const char *kVersion = "0.1.0";

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string data;
    std::string out;
    bool force = false;
    int jobs = 1;
    std::uint64_t seed = 1;

    std::optional<double> lambda;
    std::vector<double> lambda_grid;
    double gamma = 0.5;
    std::vector<double> gamma_grid;
    std::string mode = "lscggm";
    std::string parametrisation = "ratio01";
    bool penalize_diagonal = true;
    int n_lambda = 12;
    double min_ratio = 0.02;

    double rho = 1.0;
    std::optional<double> tol;
    int max_iter = 500;
    int inner_max_iter = 50;
    double inner_tol = 1e-8;

    int pairs = 50;
    double ev_max = 1.0;

    int p = 32;
    long n = 3000;
    std::vector<int> dz{2};
    std::vector<int> dh{2};
    int replicates = 1;
    EffectSizeConfig effect;

    double c_const = 1.0;
    std::vector<double> q{1, 1, 1, 1, 1, 1};
    double epsilon = 1e-8;
    std::string cov;
    std::vector<std::string> modes{"lscggm", "scggm", "lrps", "glasso"};
};

using Setter = std::function<void(RunConfig &, const json &)>;

template <class T> Setter set(T RunConfig::*field) {
    return [field](RunConfig &c, const json &v) { c.*field = v.get<T>(); };
}

const std::map<std::string, Setter> &setters() {
    static const std::map<std::string, Setter> table = {
        {"data", set(&RunConfig::data)},
        {"out", set(&RunConfig::out)},
        {"force", set(&RunConfig::force)},
        {"jobs", set(&RunConfig::jobs)},
        {"seed", set(&RunConfig::seed)},
        {"lambda", [](RunConfig &c, const json &v) { c.lambda = v.get<double>(); }},
        {"lambda_grid", set(&RunConfig::lambda_grid)},
        {"gamma", set(&RunConfig::gamma)},
        {"gamma_grid", set(&RunConfig::gamma_grid)},
        {"mode", set(&RunConfig::mode)},
        {"parametrisation", set(&RunConfig::parametrisation)},
        {"penalize_diagonal", set(&RunConfig::penalize_diagonal)},
        {"n_lambda", set(&RunConfig::n_lambda)},
        {"min_ratio", set(&RunConfig::min_ratio)},
        {"rho", set(&RunConfig::rho)},
        {"tol", [](RunConfig &c, const json &v) { c.tol = v.get<double>(); }},
        {"max_iter", set(&RunConfig::max_iter)},
        {"inner_max_iter", set(&RunConfig::inner_max_iter)},
        {"inner_tol", set(&RunConfig::inner_tol)},
        {"pairs", set(&RunConfig::pairs)},
        {"ev_max", set(&RunConfig::ev_max)},
        {"p", set(&RunConfig::p)},
        {"n", set(&RunConfig::n)},
        {"dz", set(&RunConfig::dz)},
        {"dh", set(&RunConfig::dh)},
        {"replicates", set(&RunConfig::replicates)},
        {"sx_offdiag", [](RunConfig &c, const json &v) { c.effect.sx_offdiag = v.get<double>(); }},
        {"mxh_scale", [](RunConfig &c, const json &v) { c.effect.mxh_scale = v.get<double>(); }},
        {"mzx_scale", [](RunConfig &c, const json &v) { c.effect.mzx_scale = v.get<double>(); }},
        {"diag_boost", [](RunConfig &c, const json &v) { c.effect.diag_boost = v.get<double>(); }},
        {"c_const", set(&RunConfig::c_const)},
        {"q", set(&RunConfig::q)},
        {"epsilon", set(&RunConfig::epsilon)},
        {"cov", set(&RunConfig::cov)},
        {"modes", set(&RunConfig::modes)},
    };
    return table;
}

const std::set<std::string> kCommon = {"data", "out", "force", "jobs", "seed"};
const std::set<std::string> kPenalty = {"lambda", "gamma", "mode", "parametrisation",
                                        "penalize_diagonal"};
const std::set<std::string> kSolver = {"rho", "tol", "max_iter", "inner_max_iter", "inner_tol"};
const std::set<std::string> kGrid = {"lambda_grid", "gamma_grid", "n_lambda", "min_ratio"};

std::set<std::string> allowed_keys(const std::string &cmd) {
    std::set<std::string> keys = kCommon;
    auto add = [&](const std::set<std::string> &s) { keys.insert(s.begin(), s.end()); };
    if (cmd == "simulate") {
        add({"p", "n", "dz", "dh", "replicates", "sx_offdiag", "mxh_scale", "mzx_scale",
             "diag_boost"});
    } else if (cmd == "fit") {
        add(kPenalty);
        add(kSolver);
    } else if (cmd == "path" || cmd == "eval") {
        add(kPenalty);
        add(kSolver);
        add(kGrid);
        if (cmd == "eval")
            add({"modes"});
    } else if (cmd == "stability") {
        add(kPenalty);
        add(kSolver);
        add(kGrid);
        add({"pairs", "ev_max"});
    } else if (cmd == "diagnose") {
        add({"c_const", "q"});
    } else if (cmd == "export-sdp") {
        add(kPenalty);
        add({"epsilon", "cov"});
    }
    return keys;
}

void apply_config_file(RunConfig &cfg, const std::string &path, const std::string &cmd) {
    json j;
    try {
        j = read_json_file(path);
    } catch (const std::exception &e) {
        throw UsageError(std::string("cannot read config: ") + e.what());
    }
    if (!j.is_object())
        throw UsageError("config file must hold a JSON object");
    const auto allowed = allowed_keys(cmd);
    for (const auto &[key, value] : j.items()) {
        if (!allowed.count(key))
            throw UsageError("unknown config key '" + key + "' for command '" + cmd + "'");
        try {
            setters().at(key)(cfg, value);
        } catch (const json::exception &e) {
            throw UsageError("bad value for config key '" + key + "': " + e.what());
        }
    }
}

json config_echo(const RunConfig &c, const std::string &cmd) {
    json all = {{"data", c.data},
                {"out", c.out},
                {"force", c.force},
                {"jobs", c.jobs},
                {"seed", c.seed},
                {"lambda", c.lambda ? json(*c.lambda) : json(nullptr)},
                {"lambda_grid", c.lambda_grid},
                {"gamma", c.gamma},
                {"gamma_grid", c.gamma_grid},
                {"mode", c.mode},
                {"parametrisation", c.parametrisation},
                {"penalize_diagonal", c.penalize_diagonal},
                {"n_lambda", c.n_lambda},
                {"min_ratio", c.min_ratio},
                {"rho", c.rho},
                {"tol", c.tol ? json(*c.tol) : json(nullptr)},
                {"max_iter", c.max_iter},
                {"inner_max_iter", c.inner_max_iter},
                {"inner_tol", c.inner_tol},
                {"pairs", c.pairs},
                {"ev_max", c.ev_max},
                {"p", c.p},
                {"n", c.n},
                {"dz", c.dz},
                {"dh", c.dh},
                {"replicates", c.replicates},
                {"sx_offdiag", c.effect.sx_offdiag},
                {"mxh_scale", c.effect.mxh_scale},
                {"mzx_scale", c.effect.mzx_scale},
                {"diag_boost", c.effect.diag_boost},
                {"c_const", c.c_const},
                {"q", c.q},
                {"epsilon", c.epsilon},
                {"cov", c.cov},
                {"modes", c.modes}};
    json out = json::object();
    for (const auto &key : allowed_keys(cmd))
        out[key] = all.at(key);
    return out;
}

/// Output directory bookkeeping: refuses to overwrite, records written files.
class Run {
  public:
    Run(std::string cmd, const RunConfig &cfg, std::vector<std::string> argv)
        : cmd_(std::move(cmd)), cfg_(cfg), argv_(std::move(argv)),
          start_(std::chrono::steady_clock::now()) {
        if (cfg.out.empty())
            throw UsageError("--out is required");
        out_ = cfg.out;
        if (fs::exists(out_) && !fs::is_empty(out_) && !cfg.force)
            throw UsageError("output directory '" + out_.string() +
                             "' is not empty (use --force)");
        fs::create_directories(out_);
    }

    fs::path file(const std::string &name) {
        outputs_.push_back(name);
        const fs::path p = out_ / name;
        fs::create_directories(p.parent_path());
        return p;
    }
    void log(const std::string &line) { log_ << line << '\n'; }
    const fs::path &dir() const { return out_; }

    void finish(const json &extra = json::object()) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json manifest = {{"command", cmd_},
                         {"version", kVersion},
                         {"config", config_echo(cfg_, cmd_)},
                         {"outputs", outputs_}};
        for (const auto &[k, v] : extra.items())
            manifest[k] = v;
        write_json_file(out_ / "manifest.json", manifest);

        std::ofstream f(out_ / "run.log");
        std::ostringstream cmdline;
        for (const auto &a : argv_)
            cmdline << a << ' ';
        const std::time_t now = std::time(nullptr);
        char stamp[64];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        f << "lscggm " << kVersion << " (Eigen " << EIGEN_WORLD_VERSION << '.'
          << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << ")\n"
          << "finished: " << stamp << '\n'
          << "command: " << cmdline.str() << '\n'
          << "config: " << config_echo(cfg_, cmd_).dump() << '\n'
          << log_.str() << "wall_time_s: " << secs << '\n';
    }

  private:
    std::string cmd_;
    RunConfig cfg_;
    std::vector<std::string> argv_;
    std::chrono::steady_clock::time_point start_;
    fs::path out_;
    std::vector<std::string> outputs_;
    std::ostringstream log_;
};

PenaltyConfig penalty_from(const RunConfig &c, double lambda, double gamma) {
    PenaltyConfig pen;
    pen.lambda = lambda;
    pen.gamma = gamma;
    if (c.parametrisation == "ratio01")
        pen.parametrisation = Parametrisation::ratio01;
    else if (c.parametrisation == "raw")
        pen.parametrisation = Parametrisation::raw;
    else
        throw UsageError("parametrisation must be ratio01 or raw");
    pen.penalize_diagonal = c.penalize_diagonal;
    try {
        pen.validate();
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    }
    return pen;
}

SolverOptions solver_from(const RunConfig &c) {
    SolverOptions o;
    o.rho = c.rho;
    o.max_iter = c.max_iter;
    o.inner_max_iter = c.inner_max_iter;
    o.inner_tol = c.inner_tol;
    if (c.tol) {
        o.tol_primal = *c.tol;
        o.tol_dual = *c.tol;
    }
    o.record_objective = false;
    try {
        o.validate();
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    }
    return o;
}

Method method_from(const std::string &name) {
    try {
        return parse_method(name);
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    }
}

LoadedDataset load_data(const RunConfig &c) {
    if (c.data.empty())
        throw UsageError("--data is required");
    if (!fs::is_directory(c.data))
        throw UsageError("data directory '" + c.data + "' does not exist");
    return load_dataset(c.data);
}

std::vector<double> gammas_of(const RunConfig &c) {
    return c.gamma_grid.empty() ? std::vector<double>{c.gamma} : c.gamma_grid;
}

EdgeSet truth_edges(const LoadedDataset &ds) {
    const int p = static_cast<int>(ds.data_x.cols());
    return edge_set(ds.marginal_truth->s_star.topRows(p), 0.0);
}

// --- subcommands -------------------------------------------------------------

int cmd_simulate(const RunConfig &c, Run &run) {
    json runs = json::array();
    int count = 0;
    for (int dz : c.dz)
        for (int dh : c.dh)
            for (int r = 0; r < c.replicates; ++r) {
                SimulationDesign d;
                d.p = c.p;
                d.n = c.n;
                d.d_z = dz;
                d.d_h = dh;
                d.seed = c.seed;
                d.replicate = static_cast<std::uint64_t>(r);
                d.effect = c.effect;
                try {
                    d.validate();
                } catch (const std::invalid_argument &e) {
                    throw UsageError(e.what());
                }
                std::ostringstream name;
                name << "p" << d.p << "_n" << d.n << "_dz" << dz << "_dh" << dh << "/rep"
                     << (r < 10 ? "0" : "") << r;
                const auto ds = sample_dataset(d);
                save_dataset(run.dir() / name.str(), ds);
                runs.push_back({{"path", name.str()}, {"design", to_json(d)}});
                ++count;
            }
    run.log("datasets: " + std::to_string(count));
    run.finish({{"runs", runs}});
    std::cout << "wrote " << count << " dataset(s) to " << run.dir().string() << '\n';
    return 0;
}

int cmd_fit(const RunConfig &c, Run &run) {
    if (!c.lambda)
        throw UsageError("--lambda is required");
    const auto ds = load_data(c);
    const auto cov = sample_covariances(ds.data_z, ds.data_x);
    const auto pen = penalty_from(c, *c.lambda, c.gamma);
    const auto opts = solver_from(c);
    const Method method = method_from(c.mode);

    const auto mf = fit_method(cov, pen, opts, method);
    json fj = to_json(mf.fit);
    fj["mode"] = method_name(method);
    if (method_is_joint(method)) {
        fj["joint_estimate"] = to_json(mf.fit.params);
        for (const auto &[k, v] : to_json(mf.params).items())
            fj[k] = v;
    }
    write_json_file(run.file("fit.json"), fj);
    const auto kkt =
        kkt_certificate(mf.fit, method_covariance(cov, method), pen, method_fit_mode(method));
    write_json_file(run.file("kkt.json"), to_json(kkt));
    write_csv_matrix(run.file("s_x.csv"), mf.params.s_x());
    write_csv_matrix(run.file("l_x.csv"), mf.params.l_x());
    write_csv_matrix(run.file("s_zx.csv"), mf.params.s_zx());
    write_csv_matrix(run.file("l_zx.csv"), mf.params.l_zx());
    if (ds.marginal_truth) {
        auto rep = param_errors(mf.params, *ds.marginal_truth, c.gamma);
        write_json_file(run.file("recovery.json"), to_json(rep));
    }
    std::ostringstream msg;
    msg << "mode=" << method_name(method) << " objective=" << mf.fit.objective
        << " iterations=" << mf.fit.iterations << " converged=" << mf.fit.converged
        << " rank_l=" << mf.fit.rank_l << " kkt_worst=" << kkt.worst();
    run.log(msg.str());
    if (!mf.fit.converged)
        run.log("warning: ADMM did not reach tolerance within max_iter");
    run.finish();
    std::cout << msg.str() << '\n';
    return 0;
}

int cmd_path(const RunConfig &c, Run &run) {
    const auto ds = load_data(c);
    const auto cov = sample_covariances(ds.data_z, ds.data_x);
    const auto opts = solver_from(c);
    const Method method = method_from(c.mode);
    const auto gammas = gammas_of(c);

    std::vector<std::vector<PathPoint>> paths(gammas.size());
    parallel_for(static_cast<int>(gammas.size()), c.jobs, [&](int g) {
        const auto pen = penalty_from(c, 0.0, gammas[static_cast<std::size_t>(g)]);
        const auto grid = c.lambda_grid.empty()
                              ? default_lambda_grid(cov, pen, method, c.n_lambda, c.min_ratio)
                              : c.lambda_grid;
        paths[static_cast<std::size_t>(g)] = lambda_path(cov, pen, grid, opts, method);
    });

    json out = json::array();
    std::ofstream pr;
    std::optional<EdgeSet> truth;
    if (ds.marginal_truth) {
        truth = truth_edges(ds);
        pr.open(run.file("pr.csv"));
        pr << "recall,precision,lambda,gamma\n";
    }
    json aucs = json::array();
    std::vector<std::vector<EdgeSet>> surface;
    for (std::size_t g = 0; g < gammas.size(); ++g) {
        const auto edges = path_edge_sets(paths[g]);
        for (std::size_t k = 0; k < paths[g].size(); ++k) {
            const auto &fr = paths[g][k].result.fit;
            out.push_back({{"gamma", gammas[g]},
                           {"lambda", paths[g][k].lambda},
                           {"objective", fr.objective},
                           {"iterations", fr.iterations},
                           {"converged", fr.converged},
                           {"rank_l", fr.rank_l},
                           {"n_edges", edges[k].size()},
                           {"edges", to_json(edges[k])["edges"]}});
            if (truth) {
                const auto prv = precision_recall(edges[k], *truth);
                if (prv.precision)
                    pr << format_double(*prv.recall) << ',' << format_double(*prv.precision)
                       << ',' << format_double(paths[g][k].lambda) << ','
                       << format_double(gammas[g]) << '\n';
            }
        }
        if (truth) {
            const auto a = auc_from_path(edges, *truth);
            aucs.push_back({{"gamma", gammas[g]}, {"auc", a.value}, {"all_absent", a.all_absent}});
            surface.push_back(edges);
        }
    }
    write_json_file(run.file("path.json"), out);
    if (truth) {
        write_json_file(run.file("auc.json"), {{"per_gamma", aucs}, {"vus", vus(surface, *truth)}});
        run.log("vus: " + format_double(vus(surface, *truth)));
    }
    run.log("fits: " + std::to_string(out.size()));
    run.finish();
    std::cout << "path: " << out.size() << " fits\n";
    return 0;
}

int cmd_stability(const RunConfig &c, Run &run) {
    const auto ds = load_data(c);
    const auto cov = sample_covariances(ds.data_z, ds.data_x);
    const auto opts = solver_from(c);
    const Method method = method_from(c.mode);
    const auto gammas = gammas_of(c);
    const int p = static_cast<int>(ds.data_x.cols());

    json per_gamma = json::array();
    std::vector<EdgeSet> stable;
    std::ofstream edges_csv(run.file("stable_edges.csv"));
    edges_csv << "gamma,i,j,inclusion_prob\n";
    for (double gamma : gammas) {
        const auto pen = penalty_from(c, 0.0, gamma);
        StabilityConfig sc;
        sc.b_pairs = c.pairs;
        sc.ev_max = c.ev_max;
        sc.seed = c.seed;
        sc.jobs = c.jobs;
        sc.gamma_grid = gammas;
        sc.lambda_grid = c.lambda_grid.empty()
                             ? default_lambda_grid(cov, pen, method, c.n_lambda, c.min_ratio)
                             : c.lambda_grid;
        try {
            sc.validate();
        } catch (const std::invalid_argument &e) {
            throw UsageError(e.what());
        }
        const auto res =
            complementary_pairs_select(ds.data_z, ds.data_x, pen, sc, opts, method);
        json j = to_json(res);
        j["gamma"] = gamma;
        j["lambda_grid"] = sc.lambda_grid;
        per_gamma.push_back(j);
        for (auto [i, jj] : res.stable_edges.edges())
            edges_csv << format_double(gamma) << ',' << i << ',' << jj << ','
                      << format_double(res.inclusion_prob.at({i, jj})) << '\n';
        stable.push_back(res.stable_edges);
        std::ostringstream msg;
        msg << "gamma=" << gamma << " stable_edges=" << res.stable_edges.size()
            << " tau=" << res.tau << " q=" << res.q_avg << " pairs_used=" << res.pairs_used;
        run.log(msg.str());
        std::cout << msg.str() << '\n';
    }
    write_json_file(run.file("stability.json"), {{"p", p}, {"per_gamma", per_gamma}});
    if (gammas.size() >= 2)
        write_csv_matrix(run.file("jaccard.csv"), gamma_jaccard_matrix(stable));
    run.finish();
    return 0;
}

int cmd_diagnose(const RunConfig &c, Run &run) {
    const auto ds = load_data(c);
    if (!ds.marginal_truth)
        throw UsageError("diagnose needs truth/s_star.csv and truth/l_star.csv in the dataset");
    if (c.q.size() != 6)
        throw UsageError("q needs exactly six constants");
    const auto cov = sample_covariances(ds.data_z, ds.data_x);
    const auto &truth = *ds.marginal_truth;
    const auto rep = identifiability_report(truth.s_star, truth.l_star, c.c_const);
    std::array<double, 6> q{};
    std::copy(c.q.begin(), c.q.end(), q.begin());
    const auto tq = theorem_quantities(truth, cov, rep.xi, rep.mu, q);
    write_json_file(run.file("identifiability.json"), to_json(rep));
    write_json_file(run.file("theorem.json"), to_json(tq));

    std::ostringstream t;
    t << "quantity            value\n"
      << "xi                  " << rep.xi << '\n'
      << "mu                  " << rep.mu << (rep.mu_is_exact ? " (exact)" : " (lower bound)")
      << '\n'
      << "gamma range         [" << rep.gamma_low << ", " << rep.gamma_high << "]"
      << (rep.product_bound_ok ? "" : " (empty)") << '\n'
      << "psi_Z               " << tq.psi_z << '\n'
      << "psi*_X              " << tq.psi_x_star << '\n'
      << "phi*_ZX             " << tq.phi_zx_star << '\n'
      << "psi                 " << tq.psi << '\n'
      << "W                   " << tq.w << '\n'
      << "M                   " << tq.big_m << '\n'
      << "lambda_n            " << tq.lambda_n << '\n'
      << "n required          " << tq.n_required << '\n'
      << "sigma_min / thresh  " << tq.sigma_min << " / " << tq.sigma_threshold << '\n'
      << "theta_min / thresh  " << tq.theta_min << " / " << tq.theta_threshold << '\n'
      << "error bound         " << tq.error_bound << '\n'
      << "(constants C and Q1..Q6 are placeholders)\n";
    std::cout << t.str();
    run.log(t.str());
    run.finish();
    return 0;
}

int cmd_export_sdp(const RunConfig &c, Run &run) {
    if (!c.lambda)
        throw UsageError("--lambda is required");
    CovarianceTriple cov;
    if (!c.cov.empty()) {
        try {
            cov = covariance_from_json(read_json_file(c.cov));
        } catch (const std::exception &e) {
            throw UsageError(std::string("bad covariance file: ") + e.what());
        }
    } else {
        const auto ds = load_data(c);
        cov = sample_covariances(ds.data_z, ds.data_x);
    }
    const auto pen = penalty_from(c, *c.lambda, c.gamma);
    const auto prob = build_sdp_problem(cov, pen, c.epsilon);
    write_sdpa(prob, run.file("problem.dat-s").string());
    write_json_file(run.file("problem.json"), to_json(prob));
    write_json_file(run.file("covariance.json"), to_json(cov));
    std::ostringstream msg;
    msg << "blocks=" << prob.blocks.size() << " constraints=" << prob.constraints.size()
        << " f_inequalities=" << prob.count_role("f_upper") + prob.count_role("f_lower")
        << " nonzeros=" << prob.entries.size();
    run.log(msg.str());
    run.finish();
    std::cout << msg.str() << '\n';
    return 0;
}

int cmd_eval(const RunConfig &c, Run &run) {
    if (c.data.empty())
        throw UsageError("--data is required");
    // A simulate output (with manifest.json listing runs) or a single dataset.
    std::vector<fs::path> dirs;
    const fs::path root = c.data;
    if (fs::exists(root / "manifest.json") && !fs::exists(root / "data_x.csv")) {
        const auto man = read_json_file(root / "manifest.json");
        for (const auto &r : man.at("runs"))
            dirs.push_back(root / r.at("path").get<std::string>());
    } else {
        dirs.push_back(root);
    }
    std::vector<Method> methods;
    for (const auto &m : c.modes)
        methods.push_back(method_from(m));
    const auto opts = solver_from(c);
    EvaluationConfig ec;
    ec.gamma_grid = c.gamma_grid.empty() ? EvaluationConfig{}.gamma_grid : c.gamma_grid;
    ec.n_lambda = c.n_lambda;
    ec.min_ratio = c.min_ratio;
    ec.jobs = c.jobs;
    const PenaltyConfig base = penalty_from(c, 0.0, ec.gamma_grid.front());

    const auto levels = standard_recall_levels();
    std::map<Method, std::vector<double>> prec_sum, aucs;
    json per_dataset = json::array();
    std::ofstream curves(run.file("pr_curves.csv"));
    curves << "dataset,mode,gamma,lambda,recall,precision\n";
    for (const auto &dir : dirs) {
        RunConfig sub = c;
        sub.data = dir.string();
        const auto ds = load_data(sub);
        if (!ds.marginal_truth)
            throw UsageError("eval needs ground truth in '" + dir.string() + "'");
        const auto cov = sample_covariances(ds.data_z, ds.data_x);
        const auto truth = truth_edges(ds);
        json dj = {{"dataset", dir.string()}};
        for (Method m : methods) {
            const auto ev = evaluate_method(cov, truth, m, ec, opts, base);
            auto &ps = prec_sum[m];
            ps.resize(levels.size(), 0.0);
            for (std::size_t k = 0; k < levels.size(); ++k)
                ps[k] += ev.precision_at_recall[k];
            aucs[m].push_back(ev.best_auc);
            json gj = json::array();
            for (const auto &gp : ev.per_gamma) {
                gj.push_back({{"gamma", gp.gamma}, {"auc", gp.auc.value}});
                for (std::size_t k = 0; k < gp.edges.size(); ++k) {
                    const auto prv = precision_recall(gp.edges[k], truth);
                    if (prv.precision)
                        curves << dir.string() << ',' << method_name(m) << ','
                               << format_double(gp.gamma) << ',' << format_double(gp.lambdas[k])
                               << ',' << format_double(*prv.recall) << ','
                               << format_double(*prv.precision) << '\n';
                }
            }
            dj[method_name(m)] = {{"best_auc", ev.best_auc},
                                  {"best_gamma", ev.best_gamma},
                                  {"vus", ev.vus},
                                  {"per_gamma", gj},
                                  {"precision_at_recall", ev.precision_at_recall},
                                  {"fits", ev.fits},
                                  {"nonconverged", ev.nonconverged}};
            std::ostringstream msg;
            msg << dir.string() << ' ' << method_name(m) << " auc=" << ev.best_auc
                << " gamma=" << ev.best_gamma << " vus=" << ev.vus;
            run.log(msg.str());
            std::cout << msg.str() << '\n';
        }
        per_dataset.push_back(dj);
    }

    json summary = json::object();
    for (Method m : methods) {
        const std::string name = method_name(m);
        std::ofstream t(run.file("pr_table_" + name + ".csv"));
        t << "recall,mean_precision\n";
        std::vector<double> mean(levels.size());
        for (std::size_t k = 0; k < levels.size(); ++k) {
            mean[k] = prec_sum[m][k] / static_cast<double>(dirs.size());
            t << format_double(levels[k]) << ',' << format_double(mean[k]) << '\n';
        }
        double auc_mean = 0.0;
        for (double a : aucs[m])
            auc_mean += a;
        auc_mean /= static_cast<double>(aucs[m].size());
        summary[name] = {{"mean_auc", auc_mean}, {"mean_precision_at_recall", mean}};
    }
    write_json_file(run.file("eval.json"), {{"summary", summary},
                                            {"recall_levels", levels},
                                            {"datasets", per_dataset}});
    run.finish();
    return 0;
}

void add_common(CLI::App *sub, RunConfig &c, std::string &config_path) {
    sub->add_option("--out", c.out, "Output directory");
    sub->add_flag("--force", c.force, "Allow writing into a non-empty output directory");
    sub->add_option("--config", config_path,
                    "JSON config file; its keys override flags, unknown keys are rejected");
    sub->add_option("--jobs", c.jobs, "Parallel workers")->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "Random seed");
}

void add_data(CLI::App *sub, RunConfig &c) {
    sub->add_option("--data", c.data, "Dataset directory (data_x.csv, optional data_z.csv)");
}

void add_penalty(CLI::App *sub, RunConfig &c) {
    sub->add_option("--lambda", c.lambda, "Regularisation strength");
    sub->add_option("--gamma", c.gamma, "Sparse / low-rank trade-off");
    sub->add_option("--mode", c.mode, "lscggm, scggm, lrps or glasso");
    sub->add_option("--parametrisation", c.parametrisation, "ratio01 or raw");
    sub->add_option("--penalize-diagonal", c.penalize_diagonal,
                    "Include the diagonal of S_X in the l1 penalty (true/false)");
}

void add_solver(CLI::App *sub, RunConfig &c) {
    sub->add_option("--rho", c.rho, "Initial ADMM penalty");
    sub->add_option("--tol", c.tol, "Absolute primal and dual tolerance");
    sub->add_option("--max-iter", c.max_iter, "ADMM iteration cap");
    sub->add_option("--inner-max-iter", c.inner_max_iter, "Inner prox sweep cap");
    sub->add_option("--inner-tol", c.inner_tol, "Inner prox tolerance");
}

void add_grid(CLI::App *sub, RunConfig &c) {
    sub->add_option("--lambda-grid", c.lambda_grid, "Decreasing lambda values");
    sub->add_option("--gamma-grid", c.gamma_grid, "Gamma values");
    sub->add_option("--n-lambda", c.n_lambda, "Size of the default lambda grid");
    sub->add_option("--min-ratio", c.min_ratio, "Smallest lambda of the default grid / lambda_max");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Latent-variable sparse conditional Gaussian graphical models"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    RunConfig cfg;
    std::string config_path;

    auto *sim = app.add_subcommand("simulate", "Generate synthetic datasets");
    add_common(sim, cfg, config_path);
    sim->add_option("--p", cfg.p, "Outputs (power of two); m = p");
    sim->add_option("--n", cfg.n, "Samples");
    sim->add_option("--dz", cfg.dz, "log2 of the input-group count (one or more)");
    sim->add_option("--dh", cfg.dh, "log2 of the confounder count (one or more)");
    sim->add_option("--replicates", cfg.replicates, "Replicates per design");
    sim->add_option("--sx-offdiag", cfg.effect.sx_offdiag, "Chain edge magnitude");
    sim->add_option("--mxh-scale", cfg.effect.mxh_scale, "Confounder loading scale");
    sim->add_option("--mzx-scale", cfg.effect.mzx_scale, "Input effect scale");
    sim->add_option("--diag-boost", cfg.effect.diag_boost, "Diagonal dominance margin");

    auto *fit = app.add_subcommand("fit", "Fit one (lambda, gamma)");
    add_common(fit, cfg, config_path);
    add_data(fit, cfg);
    add_penalty(fit, cfg);
    add_solver(fit, cfg);

    auto *path = app.add_subcommand("path", "Fit lambda paths for one or more gamma");
    add_common(path, cfg, config_path);
    add_data(path, cfg);
    add_penalty(path, cfg);
    add_solver(path, cfg);
    add_grid(path, cfg);

    auto *stab = app.add_subcommand("stability", "Complementary-pairs stability selection");
    add_common(stab, cfg, config_path);
    add_data(stab, cfg);
    add_penalty(stab, cfg);
    add_solver(stab, cfg);
    add_grid(stab, cfg);
    stab->add_option("--pairs", cfg.pairs, "Complementary subsample pairs");
    stab->add_option("--ev-max", cfg.ev_max, "Bound on the expected false selections");

    auto *diag = app.add_subcommand("diagnose", "Identifiability and theorem quantities");
    add_common(diag, cfg, config_path);
    add_data(diag, cfg);
    diag->add_option("--c-const", cfg.c_const, "Incoherence constant C (placeholder)");
    diag->add_option("--q", cfg.q, "Six theorem constants Q1..Q6 (placeholders)");

    auto *sdp = app.add_subcommand("export-sdp", "Write the SDP reformulation (SDPA sparse)");
    add_common(sdp, cfg, config_path);
    add_data(sdp, cfg);
    add_penalty(sdp, cfg);
    sdp->add_option("--cov", cfg.cov, "Covariance JSON instead of --data");
    sdp->add_option("--epsilon", cfg.epsilon, "Margin for the strict log-det constraint");

    auto *ev = app.add_subcommand("eval", "Compare modes by precision/recall");
    add_common(ev, cfg, config_path);
    add_data(ev, cfg);
    add_penalty(ev, cfg);
    add_solver(ev, cfg);
    add_grid(ev, cfg);
    ev->add_option("--modes", cfg.modes, "Modes to compare");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    CLI::App *chosen = app.get_subcommands().front();
    const std::string cmd = chosen->get_name();
    std::vector<std::string> args(argv, argv + argc);
    std::unique_ptr<Run> run;
    try {
        if (!config_path.empty())
            apply_config_file(cfg, config_path, cmd);
        run = std::make_unique<Run>(cmd, cfg, args);
        if (cmd == "simulate")
            return cmd_simulate(cfg, *run);
        if (cmd == "fit")
            return cmd_fit(cfg, *run);
        if (cmd == "path")
            return cmd_path(cfg, *run);
        if (cmd == "stability")
            return cmd_stability(cfg, *run);
        if (cmd == "diagnose")
            return cmd_diagnose(cfg, *run);
        if (cmd == "export-sdp")
            return cmd_export_sdp(cfg, *run);
        if (cmd == "eval")
            return cmd_eval(cfg, *run);
    } catch (const UsageError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception &e) {
        const bool numerical = dynamic_cast<const NumericalError *>(&e) != nullptr ||
                               dynamic_cast<const DomainError *>(&e) != nullptr;
        std::cerr << (numerical ? "numerical failure: " : "error: ") << e.what() << '\n';
        if (numerical && run) {
            write_json_file(run->dir() / "diagnostics.json",
                            {{"command", cmd},
                             {"error", e.what()},
                             {"config", config_echo(cfg, cmd)}});
            run->log(std::string("numerical failure: ") + e.what());
            run->finish({{"failed", true}});
        }
        return numerical ? 2 : 1;
    }
    return 1;
}
