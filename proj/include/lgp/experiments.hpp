#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgp/specfun.hpp"
#include "lgp/stats.hpp"

namespace lgp {

/// Shared statistical thresholds: sigma multiplier for moment checks and the
/// minimum acceptable KS p-value.
struct Thresholds {
    double sigma = 4.0;
    double p_min = 1e-3;
};

struct RunOptions {
    std::uint64_t seed = 42;
    int workers = 0;  // 0: OpenMP default
    Thresholds thresholds;
    bool keep_replicas = false;  // per-replica CSV tables
    bool progress = false;       // progress lines on stderr
};

/// One verification: estimate must lie in [lower, upper]. Non-gating checks
/// are reported but do not affect the verdict.
struct Check {
    std::string name;
    int criterion = 0;
    double estimate = 0.0;
    double target = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool pass = false;
    bool gating = true;
};

struct CsvTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct ExperimentReport {
    std::string name;
    std::vector<int> criteria;
    nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
    nlohmann::ordered_json estimates = nlohmann::ordered_json::object();
    std::vector<Check> checks;
    std::vector<CsvTable> tables;
    std::vector<std::string> notes;
    std::uint64_t seed = 0;
    int workers = 0;
    double wall_seconds = 0.0;
    std::string timestamp;

    /// Records a check and returns its pass flag.
    bool check(std::string check_name, int criterion, double estimate, double target, double lower, double upper,
               bool gating = true);
    bool passed() const;

    /// Full report. With include_run=false the "run" block (workers, wall
    /// clock, timestamp) is left out; what remains is a pure function of the
    /// configuration and seed.
    nlohmann::ordered_json to_json(bool include_run = true) const;
};

std::string write_csv(const CsvTable& table);

struct BurkeConfig {
    double theta = 0.8;
    double mu = 2.0;
    int m = 30;
    int n = 30;
    long reps = 20000;
};

struct FixedPointConfig {
    double theta = 1.0;
    double mu = 2.0;
    long reps = 1000000;
};

struct VarIdentityConfig {
    double theta = 0.9;
    double mu = 2.0;
    double N = 64;
    long reps = 20000;
};

struct ChiConfig {
    double theta = 1.0;
    double mu = 2.0;
    std::vector<int> n_list{64, 128, 256, 512, 1024};
    std::vector<long> reps{5000, 3344, 2236, 1495, 1000};
};

struct ZetaConfig {
    double theta = 1.0;
    double mu = 2.0;
    std::vector<int> n_list{64, 128, 256, 512};
    std::vector<long> reps{2000};
    double tau = 0.5;
    std::vector<double> b_list{1.0, 2.0, 4.0};
};

struct CltConfig {
    double theta = 1.0;
    double mu = 2.0;
    double N = 512;
    double alpha = 0.9;
    double c1 = 1.0;
    long reps = 5000;
};

struct LlnBulkConfig {
    double s = 1.0;
    double t = 1.0;
    double mu = 2.0;
    double N = 512;
    long reps = 1000;
    std::vector<double> b_list{1.0, 2.0, 4.0};
};

struct FreeEndpointConfig {
    double mu = 2.0;
    std::vector<int> n_list{64, 128, 256, 512};
    std::vector<long> reps{1000};
};

struct BoundaryFreeConfig {
    double theta = 0.6;
    double mu = 2.0;
    int N = 512;
    long reps = 2000;
    bool include_symmetric = true;  // also run theta = mu/2
    long reference_draws = 1000000;
};

struct DualityConfig {
    double theta = 0.8;
    double mu = 2.0;
    int m = 20;
    int n = 20;
    long reps = 5000;
    int identity_envs = 100;
    long beta_reps = 2000;
    std::vector<int> k_list{1, 2, 5};
};

struct SelftestConfig {
    int brute_force_trials = 100;
    int max_steps = 12;
    double mean_theta = 0.7;
    double mean_mu = 1.5;
    int mean_m = 20;
    int mean_n = 30;
    long mean_reps = 10000;
};

ExperimentReport exp_burke(const BurkeConfig& cfg, const RunOptions& opts);
ExperimentReport exp_fixed_point(const FixedPointConfig& cfg, const RunOptions& opts);
ExperimentReport exp_var_identity(const VarIdentityConfig& cfg, const RunOptions& opts);
ExperimentReport exp_chi(const ChiConfig& cfg, const RunOptions& opts);
ExperimentReport exp_zeta(const ZetaConfig& cfg, const RunOptions& opts);
ExperimentReport exp_clt_offchar(const CltConfig& cfg, const RunOptions& opts);
ExperimentReport exp_lln_bulk(const LlnBulkConfig& cfg, const RunOptions& opts);
ExperimentReport exp_free_endpoint(const FreeEndpointConfig& cfg, const RunOptions& opts);
ExperimentReport exp_boundary_free_endpoint(const BoundaryFreeConfig& cfg, const RunOptions& opts);
ExperimentReport exp_duality(const DualityConfig& cfg, const RunOptions& opts);
ExperimentReport lattice_selftest(const SelftestConfig& cfg, const RunOptions& opts);

/// Stream id for replica `replica` of ensemble `index` of experiment `tag`.
std::uint64_t replica_stream(std::uint8_t tag, std::uint8_t index, std::uint64_t replica);

/// Expands a reps list to one entry per N (a single value is broadcast).
std::vector<long> reps_per_size(const std::vector<long>& reps, std::size_t sizes);

}  // namespace lgp
