#include "lscggm/sdp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <system_error>
#include <tuple>

namespace lscggm {

int SdpProblem::block_index(const std::string &name) const {
    for (std::size_t k = 0; k < blocks.size(); ++k)
        if (blocks[k].name == name)
            return static_cast<int>(k) + 1;
    return 0;
}

int SdpProblem::count_role(const std::string &role) const {
    return static_cast<int>(std::count_if(constraints.begin(), constraints.end(),
                                          [&](const SdpConstraint &c) { return c.role == role; }));
}

namespace {

/// Accumulates coefficients keyed by (constraint, block, i, j), 0-based
/// matrix indices on input.
class Builder {
  public:
    /// Adds coef·X_ij (as a linear functional of the symmetric block) to
    /// constraint k. Off-diagonal entries are halved because SDPA mirrors them.
    void add(int k, int block, int i, int j, double coef) {
        if (i > j)
            std::swap(i, j);
        const double v = (i == j) ? coef : 0.5 * coef;
        acc_[{k, block, i + 1, j + 1}] += v;
    }
    /// Sets the raw symmetric-matrix entry (used for C, where the cost is ⟨C, X⟩).
    void add_raw(int k, int block, int i, int j, double value) {
        if (i > j)
            std::swap(i, j);
        acc_[{k, block, i + 1, j + 1}] += value;
    }
    std::vector<SdpEntry> entries() const {
        std::vector<SdpEntry> out;
        for (const auto &[key, v] : acc_) {
            if (v == 0.0)
                continue;
            auto [k, b, i, j] = key;
            out.push_back({k, b, i, j, v});
        }
        return out;
    }

  private:
    std::map<std::tuple<int, int, int, int>, double> acc_;
};

} // namespace

SdpProblem build_sdp_problem(const CovarianceTriple &cov, const PenaltyConfig &pen,
                             double epsilon) {
    pen.validate();
    require(epsilon >= 0, "epsilon must be nonnegative");
    const int m = cov.m(), p = cov.p();
    const int d = m + p;

    SdpProblem prob;
    prob.metadata = {m,
                     p,
                     pen.lambda,
                     pen.gamma,
                     epsilon,
                     pen.parametrisation == Parametrisation::raw ? "raw" : "ratio01",
                     pen.penalize_diagonal};
    prob.blocks = {{"K", d, BlockKind::psd},        {"S_X", p, BlockKind::psd},
                   {"L_X", p, BlockKind::psd},      {"SUPER", d + p, BlockKind::psd},
                   {"R_X", p, BlockKind::psd},      {"E", p, BlockKind::psd},
                   {"F", d * p, BlockKind::diagonal}, {"SLACK", 2 * d * p, BlockKind::diagonal}};
    constexpr int bK = 1, bS = 2, bL = 3, bSup = 4, bR = 5, bE = 6, bF = 7, bSl = 8;
    prob.logdet_block = bR;
    prob.logdet_weight = 1.0;

    Builder b;
    // Cost, as C = −(minimisation coefficients).
    const Matrix sigma_o = cov.joint();
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            b.add_raw(0, bK, i, j, -sigma_o(i, j));
    const double ws = pen.sparse_weight();
    const double wn = pen.nuclear_weight();
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < p; ++c) {
            if (r < p && r == c && !pen.penalize_diagonal)
                continue;
            b.add_raw(0, bF, r * p + c, r * p + c, -ws);
        }
    for (int i = 0; i < d + p; ++i)
        b.add_raw(0, bSup, i, i, -0.5 * wn);

    int k = 0;
    auto next = [&](const std::string &role, double rhs) {
        prob.constraints.push_back({role, rhs});
        return ++k;
    };
    // S_rc as a linear functional, appended to constraint `con` with `sign`.
    auto add_s = [&](int con, int r, int c, double sign) {
        if (r < p) {
            b.add(con, bS, r, c, sign);
        } else {
            b.add(con, bK, r - p, m + c, sign); // R_ZX entry
            b.add(con, bSup, r, d + c, sign);   // L_ZX entry
        }
    };
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < p; ++c) {
            const int f = r * p + c;
            int con = next("f_upper", 0.0); // F − S − σ⁺ = 0
            b.add(con, bF, f, f, 1.0);
            add_s(con, r, c, -1.0);
            b.add(con, bSl, 2 * f, 2 * f, -1.0);
            con = next("f_lower", 0.0); // F + S − σ⁻ = 0
            b.add(con, bF, f, f, 1.0);
            add_s(con, r, c, 1.0);
            b.add(con, bSl, 2 * f + 1, 2 * f + 1, -1.0);
        }
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) {
            const int con = next("tie_k_x", 0.0); // K_XX − S_X + L_X = 0
            b.add(con, bK, m + i, m + j, 1.0);
            b.add(con, bS, i, j, -1.0);
            b.add(con, bL, i, j, 1.0);
        }
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            const int con = next("tie_l_x", 0.0); // L_X block = L_X part of SUPER
            b.add(con, bL, i, j, 1.0);
            b.add(con, bSup, i, d + j, -1.0);
        }
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) {
            const int con = next("tie_r", 0.0); // R_X − K_XX = 0
            b.add(con, bR, i, j, 1.0);
            b.add(con, bK, m + i, m + j, -1.0);
        }
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) {
            const int con = next("tie_e", i == j ? -epsilon : 0.0); // E − R_X = −εI
            b.add(con, bE, i, j, 1.0);
            b.add(con, bR, i, j, -1.0);
        }
    prob.entries = b.entries();
    return prob;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string &tok) {
    double v = 0.0;
    const char *first = tok.data();
    const char *last = first + tok.size();
    if (first != last && *first == '+')
        ++first;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw std::invalid_argument("malformed number in SDPA file: '" + tok + "'");
    return v;
}

int parse_int(const std::string &tok) {
    const double v = parse_double(tok);
    if (v != std::floor(v))
        throw std::invalid_argument("expected an integer in SDPA file: '" + tok + "'");
    return static_cast<int>(v);
}

/// Splits key=value tokens of a comment line.
std::map<std::string, std::string> keyvals(std::istringstream &in) {
    std::map<std::string, std::string> out;
    std::string tok;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos)
            out[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return out;
}

} // namespace

std::string to_sdpa_string(const SdpProblem &problem) {
    std::ostringstream out;
    const auto &md = problem.metadata;
    out << "*LSCGGM-SDP m=" << md.m << " p=" << md.p << " lambda=" << fmt(md.lambda)
        << " gamma=" << fmt(md.gamma) << " epsilon=" << fmt(md.epsilon)
        << " parametrisation=" << md.parametrisation
        << " penalize_diagonal=" << (md.penalize_diagonal ? 1 : 0) << '\n';
    for (std::size_t k = 0; k < problem.blocks.size(); ++k)
        out << "*BLOCK " << k + 1 << " name=" << problem.blocks[k].name << '\n';
    if (problem.logdet_block > 0)
        out << "*LOGDET block=" << problem.logdet_block
            << " weight=" << fmt(problem.logdet_weight) << '\n';
    for (std::size_t k = 0; k < problem.constraints.size(); ++k)
        if (!problem.constraints[k].role.empty())
            out << "*ROLE " << k + 1 << ' ' << problem.constraints[k].role << '\n';

    out << problem.constraints.size() << '\n' << problem.blocks.size() << '\n';
    for (std::size_t k = 0; k < problem.blocks.size(); ++k) {
        const auto &blk = problem.blocks[k];
        out << (k ? " " : "") << (blk.kind == BlockKind::diagonal ? -blk.size : blk.size);
    }
    out << '\n';
    for (std::size_t k = 0; k < problem.constraints.size(); ++k)
        out << (k ? " " : "") << fmt(problem.constraints[k].rhs);
    out << '\n';
    for (const auto &e : problem.entries) {
        require(e.i <= e.j, "SDPA entries must lie in the upper triangle");
        out << e.constraint << ' ' << e.block << ' ' << e.i << ' ' << e.j << ' ' << fmt(e.value)
            << '\n';
    }
    return out.str();
}

void write_sdpa(const SdpProblem &problem, const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    f << to_sdpa_string(problem);
    if (!f)
        throw std::runtime_error("failed writing '" + path + "'");
}

SdpProblem parse_sdpa(const std::string &text) {
    SdpProblem prob;
    std::istringstream lines(text);
    std::string line;
    std::map<int, std::string> names, roles;
    std::ostringstream body;
    bool in_header_comments = true;
    while (std::getline(lines, line)) {
        if (in_header_comments && !line.empty() && (line[0] == '*' || line[0] == '"')) {
            std::istringstream in(line);
            std::string tag;
            in >> tag;
            if (tag == "*LSCGGM-SDP") {
                auto kv = keyvals(in);
                auto &md = prob.metadata;
                md.m = parse_int(kv.at("m"));
                md.p = parse_int(kv.at("p"));
                md.lambda = parse_double(kv.at("lambda"));
                md.gamma = parse_double(kv.at("gamma"));
                md.epsilon = parse_double(kv.at("epsilon"));
                md.parametrisation = kv.at("parametrisation");
                md.penalize_diagonal = kv.at("penalize_diagonal") == "1";
            } else if (tag == "*BLOCK") {
                std::string idx;
                in >> idx;
                auto kv = keyvals(in);
                names[parse_int(idx)] = kv["name"];
            } else if (tag == "*LOGDET") {
                auto kv = keyvals(in);
                prob.logdet_block = parse_int(kv.at("block"));
                prob.logdet_weight = kv.count("weight") ? parse_double(kv.at("weight")) : 1.0;
            } else if (tag == "*ROLE") {
                std::string idx, role;
                in >> idx >> role;
                roles[parse_int(idx)] = role;
            }
            continue;
        }
        in_header_comments = false;
        body << line << '\n';
    }

    // The numeric part is whitespace separated; SDPA also allows , { } ( ).
    std::string data = body.str();
    for (char &c : data)
        if (c == ',' || c == '{' || c == '}' || c == '(' || c == ')')
            c = ' ';
    std::istringstream in(data);
    std::string tok;
    auto next_tok = [&]() {
        if (!(in >> tok))
            throw std::invalid_argument("truncated SDPA file");
        return tok;
    };
    const int n_con = parse_int(next_tok());
    const int n_blocks = parse_int(next_tok());
    require(n_con >= 0 && n_blocks >= 1, "invalid SDPA header");
    for (int k = 1; k <= n_blocks; ++k) {
        const int size = parse_int(next_tok());
        require(size != 0, "zero-sized SDPA block");
        SdpBlock blk;
        blk.name = names.count(k) ? names[k] : "block" + std::to_string(k);
        blk.kind = size < 0 ? BlockKind::diagonal : BlockKind::psd;
        blk.size = std::abs(size);
        prob.blocks.push_back(blk);
    }
    for (int k = 1; k <= n_con; ++k) {
        SdpConstraint c;
        c.rhs = parse_double(next_tok());
        c.role = roles.count(k) ? roles[k] : "";
        prob.constraints.push_back(c);
    }
    while (in >> tok) {
        SdpEntry e;
        e.constraint = parse_int(tok);
        e.block = parse_int(next_tok());
        e.i = parse_int(next_tok());
        e.j = parse_int(next_tok());
        e.value = parse_double(next_tok());
        require(e.constraint >= 0 && e.constraint <= n_con, "SDPA entry constraint out of range");
        require(e.block >= 1 && e.block <= n_blocks, "SDPA entry block out of range");
        const int size = prob.blocks[e.block - 1].size;
        if (e.i > e.j)
            std::swap(e.i, e.j);
        require(e.i >= 1 && e.j <= size, "SDPA entry index out of range");
        require(prob.blocks[e.block - 1].kind == BlockKind::psd || e.i == e.j,
                "off-diagonal entry in a diagonal block");
        prob.entries.push_back(e);
    }
    std::sort(prob.entries.begin(), prob.entries.end(), [](const SdpEntry &a, const SdpEntry &b) {
        return std::tie(a.constraint, a.block, a.i, a.j) < std::tie(b.constraint, b.block, b.i, b.j);
    });
    return prob;
}

SdpProblem read_sdpa(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_sdpa(ss.str());
}

SdpPoint sdp_point_from_params(const SdpProblem &problem, const DecomposedParams &params) {
    const int m = problem.metadata.m, p = problem.metadata.p;
    require(params.p() == p && params.m() == m, "params do not match the SDP dimensions");
    for (const char *name : {"K", "S_X", "L_X", "SUPER", "R_X", "E", "F", "SLACK"})
        require(problem.block_index(name) > 0, std::string("SDP lacks block ") + name);
    const int d = m + p;
    const auto marg = params.marginal();
    const Matrix &r_x = marg.r_x();
    const Matrix &r_zx = marg.r_zx();

    SdpPoint pt(problem.blocks.size());
    Matrix k(d, d);
    k.topLeftCorner(m, m) = r_zx * Eigen::LLT<Matrix>(r_x).solve(r_zx.transpose());
    k.topRightCorner(m, p) = r_zx;
    k.bottomLeftCorner(p, m) = r_zx.transpose();
    k.bottomRightCorner(p, p) = r_x;
    pt[problem.block_index("K") - 1] = k;
    pt[problem.block_index("S_X") - 1] = params.s_x();
    pt[problem.block_index("L_X") - 1] = params.l_x();

    const Matrix l = params.l();
    Eigen::BDCSVD<Matrix> svd(l, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto sig = svd.singularValues().asDiagonal();
    Matrix sup(d + p, d + p);
    sup.topLeftCorner(d, d) = svd.matrixU() * sig * svd.matrixU().transpose();
    sup.topRightCorner(d, p) = l;
    sup.bottomLeftCorner(p, d) = l.transpose();
    sup.bottomRightCorner(p, p) = svd.matrixV() * sig * svd.matrixV().transpose();
    pt[problem.block_index("SUPER") - 1] = sup;
    pt[problem.block_index("R_X") - 1] = r_x;
    pt[problem.block_index("E") - 1] =
        r_x - problem.metadata.epsilon * Matrix::Identity(p, p);

    const Matrix s = params.s();
    Vector f(d * p), slack(2 * d * p);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < p; ++c) {
            const int idx = r * p + c;
            f(idx) = std::abs(s(r, c));
            slack(2 * idx) = f(idx) - s(r, c);
            slack(2 * idx + 1) = f(idx) + s(r, c);
        }
    pt[problem.block_index("F") - 1] = f.asDiagonal();
    pt[problem.block_index("SLACK") - 1] = slack.asDiagonal();
    return pt;
}

namespace {

/// ⟨A, X⟩ contributions of every entry, grouped by constraint.
std::vector<double> inner_products(const SdpProblem &problem, const SdpPoint &point) {
    require(point.size() == problem.blocks.size(), "point has the wrong number of blocks");
    std::vector<double> out(problem.constraints.size() + 1, 0.0);
    for (const auto &e : problem.entries) {
        const Matrix &x = point[e.block - 1];
        const double v = (e.i == e.j) ? e.value * x(e.i - 1, e.i - 1)
                                      : e.value * (x(e.i - 1, e.j - 1) + x(e.j - 1, e.i - 1));
        out[e.constraint] += v;
    }
    return out;
}

} // namespace

double evaluate_sdp_objective(const SdpProblem &problem, const SdpPoint &point) {
    double value = -inner_products(problem, point)[0];
    if (problem.logdet_block > 0) {
        const Matrix &x = point[problem.logdet_block - 1];
        Eigen::LLT<Matrix> llt(symmetrize(x));
        if (llt.info() != Eigen::Success)
            throw DomainError("log-det block is not positive definite");
        const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        value -= problem.logdet_weight * logdet;
    }
    return value;
}

double sdp_equality_residual(const SdpProblem &problem, const SdpPoint &point) {
    const auto ip = inner_products(problem, point);
    double worst = 0.0;
    for (std::size_t k = 0; k < problem.constraints.size(); ++k)
        worst = std::max(worst, std::abs(ip[k + 1] - problem.constraints[k].rhs));
    return worst;
}

double sdp_min_block_eigenvalue(const SdpPoint &point) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto &x : point)
        if (x.size() > 0)
            lo = std::min(lo, min_eigenvalue(symmetrize(x)));
    return lo;
}

} // namespace lscggm
