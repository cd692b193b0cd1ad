#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lgp/rng.hpp"
#include "lgp/specfun.hpp"

namespace lgp {

/// Substreams reserved for environment construction. Every bulk row has its
/// own substream so that any prefix of a row can be regenerated on its own.
namespace env_substream {
inline constexpr std::uint32_t kRowU = 1;
inline constexpr std::uint32_t kColumnV = 2;
inline constexpr std::uint32_t kBulkRow0 = 1024;
inline std::uint32_t bulk_row(int i) { return kBulkRow0 + static_cast<std::uint32_t>(i); }
}  // namespace env_substream

/// Log-weights on the lattice {0..m} x {0..n}.
///
/// log_u0[i-1] = log U_{i,0}, log_v0[j-1] = log V_{0,j} and
/// log_y[(i-1)*n + (j-1)] = log Y_{i,j}. There is no weight at the origin.
/// Bulk-only environments leave the two boundary arrays empty.
struct Environment {
    int m = 0;
    int n = 0;
    std::vector<double> log_u0;
    std::vector<double> log_v0;
    std::vector<double> log_y;
    bool has_boundary = false;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    double theta = 0.0;  // 0 for bulk-only environments
    double mu = 0.0;

    double bulk(int i, int j) const { return log_y[static_cast<std::size_t>(i - 1) * n + (j - 1)]; }
    double& bulk(int i, int j) { return log_y[static_cast<std::size_t>(i - 1) * n + (j - 1)]; }

    /// log Y_{i,j} with the boundary convention Y_{i,0} = U_{i,0}, Y_{0,j} = V_{0,j}
    /// and Y_{0,0} = 1.
    double log_weight(int i, int j) const {
        if (i > 0 && j > 0) return bulk(i, j);
        if (j == 0) return i == 0 ? 0.0 : log_u0[i - 1];
        return log_v0[j - 1];
    }

    bool operator==(const Environment&) const = default;
};

/// One Gamma(shape, 1) variate.
double sample_gamma(double shape, RngStream& rng);
/// log of one Gamma(shape, 1) variate, without underflow for small shapes.
double sample_log_gamma(double shape, RngStream& rng);

/// Boundary environment with reciprocal weights Gamma(theta), Gamma(mu-theta)
/// and Gamma(mu). Draws come from the reserved substreams of rng's
/// (master_seed, stream_id); rng itself is not advanced.
Environment build_env(int m, int n, const ModelParams& p, const RngStream& rng);

/// Bulk-only environment, reciprocal weights Gamma(mu).
Environment build_bulk_env(int m, int n, double mu, const RngStream& rng);

/// Lowers every log U_{i,0} and raises every log V_{0,j} by delta.
Environment perturb_boundary_ordered(const Environment& env, double delta);

/// Environment with constant log-weight everywhere (tests and examples).
Environment constant_env(int m, int n, double log_w, bool with_boundary = true);

void write_env(std::ostream& os, const Environment& env);
Environment read_env(std::istream& is);
void save_env(const std::string& path, const Environment& env);
Environment load_env(const std::string& path);

}  // namespace lgp
