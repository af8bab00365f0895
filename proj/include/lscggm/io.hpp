#pragma once

// Dense CSV matrices, JSON documents for every result type and the on-disk
// dataset layout.

#include "lscggm/admm.hpp"
#include "lscggm/identifiability.hpp"
#include "lscggm/metrics.hpp"
#include "lscggm/sdp.hpp"
#include "lscggm/simgen.hpp"
#include "lscggm/stability.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace lscggm {

using json = nlohmann::json;

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// Row-major, comma separated, no header. An empty file is a 0×0 matrix.
Matrix read_csv_matrix(const std::filesystem::path &path);
void write_csv_matrix(const std::filesystem::path &path, const Matrix &a);

json matrix_to_json(const Matrix &a);
/// `cols` fixes the width of an empty (0-row) matrix.
Matrix matrix_from_json(const json &j, Eigen::Index cols = 0);

json to_json(const CovarianceTriple &cov);
CovarianceTriple covariance_from_json(const json &j);

json to_json(const DecomposedParams &params);
DecomposedParams params_from_json(const json &j);

json to_json(const FitResult &r);
json to_json(const KktReport &k);
json to_json(const RecoveryReport &r);
json to_json(const EdgeSet &e);
json to_json(const IdentifiabilityReport &r);
json to_json(const TheoremQuantities &t);
json to_json(const StabilityResult &r);
json to_json(const SdpProblem &p);
json to_json(const EffectSizeConfig &e);
json to_json(const SimulationDesign &d);
SimulationDesign design_from_json(const json &j);

json read_json_file(const std::filesystem::path &path);
void write_json_file(const std::filesystem::path &path, const json &j);

/// design.json, truth/{m_x,m_xh,m_h,m_zx,m_zh,s_star,l_star}.csv,
/// data_z.csv and data_x.csv.
void save_dataset(const std::filesystem::path &dir, const SyntheticDataset &ds);

struct LoadedDataset {
    Matrix data_z;
    Matrix data_x;
    std::optional<SimulationDesign> design;
    std::optional<GroundTruthModel> truth;
    std::optional<MarginalizedTruth> marginal_truth;
};

/// data_z.csv may be absent (m = 0); truth/ and design.json are optional.
LoadedDataset load_dataset(const std::filesystem::path &dir);

} // namespace lscggm
