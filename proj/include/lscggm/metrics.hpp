#pragma once

// Scoring estimated graphs against a ground truth, plus the adapter that
// turns joint (Z∪X) fits into conditional-model estimates.

#include "lscggm/admm.hpp"

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace lscggm {

/// Undirected edges over vertices 1..p, stored as (min, max).
class EdgeSet {
  public:
    explicit EdgeSet(int p = 0) : p_(p) {}

    /// Inserts {i, j} (1-based); self-loops are rejected.
    void insert(int i, int j);
    bool contains(int i, int j) const;
    int p() const { return p_; }
    std::size_t size() const { return edges_.size(); }
    bool empty() const { return edges_.empty(); }
    const std::set<std::pair<int, int>> &edges() const { return edges_; }
    std::size_t intersection_size(const EdgeSet &other) const;

    bool operator==(const EdgeSet &other) const = default;

  private:
    int p_;
    std::set<std::pair<int, int>> edges_;
};

constexpr double kDefaultEdgeTol = 1e-6;

/// Off-diagonal entries of s_x with |value| > tol (either triangle).
EdgeSet edge_set(const Matrix &s_x, double tol = kDefaultEdgeTol);

/// Absent values mark empty denominators.
struct PrecisionRecall {
    std::optional<double> precision;
    std::optional<double> recall;
};

PrecisionRecall precision_recall(const EdgeSet &est, const EdgeSet &truth);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

/// Achieved PR points, sorted by recall, ties collapsed to their best
/// precision. Estimates with no edges (precision undefined) are dropped.
std::vector<PrPoint> pr_curve(const std::vector<EdgeSet> &path, const EdgeSet &truth);

struct AucResult {
    double value = 0.0;
    /// True when no estimate on the path had any edge; value is then 0.
    bool all_absent = false;
};

/// Trapezoidal area under the PR polyline, with the first point's precision
/// held constant back to recall 0 and nothing beyond the largest recall.
AucResult auc_from_path(const std::vector<EdgeSet> &path, const EdgeSet &truth);

/// Mean over the γ rows of the per-row AUC.
double vus(const std::vector<std::vector<EdgeSet>> &surface, const EdgeSet &truth);

/// Precision of the PR polyline at the requested recall levels (0 beyond
/// the largest achieved recall).
std::vector<double> precision_at_recalls(const std::vector<EdgeSet> &path, const EdgeSet &truth,
                                         const std::vector<double> &levels);

/// The recall levels 0.1, 0.2, ..., 1.
std::vector<double> standard_recall_levels();

/// |E₁∩E₂| / |E₁∪E₂|; 1 when both are empty.
double jaccard(const EdgeSet &g1, const EdgeSet &g2);

struct RecoveryReport {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> auc;
    bool sign_consistent = false;
    bool rank_consistent = false;
    double err_s_inf_over_gamma = 0.0;
    double err_l_spectral = 0.0;

    double max_error() const { return std::max(err_s_inf_over_gamma, err_l_spectral); }
};

/// Theorem-style errors of an estimate against (S*, L*): (1/γ)‖Ŝ−S*‖_max,
/// ‖L̂−L*‖₂, and exact sign / rank agreement. Precision and recall refer to
/// the S_X graph at the default edge tolerance.
RecoveryReport param_errors(const DecomposedParams &est, const MarginalizedTruth &truth,
                            double gamma);

/// The four estimators compared in the experiments.
enum class Method {
    lscggm, ///< conditional model with latent component
    scggm,  ///< conditional model, L ≡ 0
    lrps,   ///< joint low-rank + sparse model on (Z, X), sliced
    glasso, ///< joint sparse model on (Z, X), sliced
};

std::string method_name(Method method);
Method parse_method(const std::string &name);
FitMode method_fit_mode(Method method);
bool method_is_joint(Method method);

/// The covariance a method actually fits: cov itself, or for joint methods
/// the (m+p)×(m+p) second moments packed as outputs with m = 0.
CovarianceTriple method_covariance(const CovarianceTriple &cov, Method method);

/// Slices a joint fit over [Z, X] back to (S_X, L_X, S_ZX, L_ZX): the
/// columns of X, with X rows giving the X blocks and Z rows the ZX blocks.
DecomposedParams extract_joint(const DecomposedParams &joint, int m, int p);

struct MethodFit {
    FitResult fit;           ///< fit on method_covariance(cov, method)
    DecomposedParams params; ///< in conditional-model coordinates
};

MethodFit fit_method(const CovarianceTriple &cov, const PenaltyConfig &pen,
                     const SolverOptions &opts, Method method,
                     const AdmmState *warm_start = nullptr);

/// Joint fit of the stacked data [Z, X], returned as conditional-model blocks.
DecomposedParams fit_joint_extract(const Matrix &data_z, const Matrix &data_x,
                                   const PenaltyConfig &pen, const SolverOptions &opts,
                                   bool latent);

} // namespace lscggm
