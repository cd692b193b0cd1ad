#pragma once

#include <cmath>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lgp/randenv.hpp"

namespace lgp {

struct Point {
    int i = 0;
    int j = 0;
    bool operator==(const Point&) const = default;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(e^a + e^b) with max subtraction; -inf is the additive identity.
inline double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == kNegInf) return a;
    return a + std::log1p(std::exp(b - a));
}

double log_sum_exp(std::span<const double> xs);

/// Dense field over the rectangle {i0..m} x {j0..n}, row-major in i.
struct LatticeField {
    int i0 = 0;
    int j0 = 0;
    int m = 0;
    int n = 0;
    std::vector<double> v;

    LatticeField() = default;
    LatticeField(Point origin, Point corner, double fill);

    int width() const { return n - j0 + 1; }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i - i0) * static_cast<std::size_t>(width()) + (j - j0);
    }
    double at(int i, int j) const { return v[index(i, j)]; }
    double& at(int i, int j) { return v[index(i, j)]; }
    Point origin() const { return {i0, j0}; }
    Point corner() const { return {m, n}; }
};

/// log Z_{origin,(i,j)} for every (i,j) in the rectangle; the origin weight
/// is excluded so the origin cell holds 0.
struct LogZLattice : LatticeField {
    using LatticeField::LatticeField;
    double total() const { return at(m, n); }
};

/// log Z^box_{(i,j),endpoint}: partition functions to a fixed endpoint that
/// include the starting weight.
struct ReverseLattice : LatticeField {
    using LatticeField::LatticeField;
};

/// log U_{i,j} = log Z_{i,j} - log Z_{i-1,j} and log V_{i,j} = log Z_{i,j} - log Z_{i,j-1};
/// NaN where undefined (logu on column i0, logv on row j0).
struct RatioFields {
    LatticeField logu;
    LatticeField logv;
};

/// log X_{i,j} = -log(1/U_{i+1,j} + 1/V_{i,j+1}) for i<m, j<n, with
/// X_{i,n} = U_{i+1,n} and X_{m,j} = V_{m,j+1}. The corner (m,n) is NaN.
struct DualWeights : LatticeField {
    using LatticeField::LatticeField;
};

enum class DpMode { sequential, wavefront };

/// Partition functions of a boundary environment from (0,0).
LogZLattice forward_logZ(const Environment& env, DpMode mode = DpMode::sequential);

/// Partition functions Z_{start,(i,j)} from bulk weights only; start >= (1,1).
LogZLattice bulk_logZ(const Environment& env, Point start, DpMode mode = DpMode::sequential);

/// Reverse partition functions to `endpoint` over {0..}x{0..} for boundary
/// environments and {1..}x{1..} for bulk-only ones.
ReverseLattice reverse_logW(const Environment& env, Point endpoint);

RatioFields ratio_fields(const LogZLattice& lat);

DualWeights dual_weights(const LogZLattice& lat, const Environment& env);

/// Reversed partition function log Z*_{i,j} = log Z_{m,n} - log Z_{m-i,n-j}.
LogZLattice star_lattice(const LogZLattice& lat);

/// The reversed environment omega*: U*_{i,0} = U_{m-i+1,n}, V*_{0,j} = V_{m,n-j+1},
/// Y*_{i,j} = X_{m-i,n-j}.
Environment reversed_environment(const LogZLattice& lat, const Environment& env);

/// log Z_{m,n}(xi_x >= k) and log Z_{m,n}(xi_y >= k), endpoint taken from rev,
/// assembled from the exit decomposition. k >= 1.
double restricted_logZ_x(const LogZLattice& lat, const ReverseLattice& rev, int k);
double restricted_logZ_y(const LogZLattice& lat, const ReverseLattice& rev, int k);

/// log of the exit-point terms (prod_{i<=s} U_{i,0}) Z^box_{(s,1),(m,n)}, s = 1..m
/// (index s-1), and the analogous y-axis terms. Endpoint taken from rev.
std::vector<double> log_exit_terms_x(const LogZLattice& lat, const ReverseLattice& rev);
std::vector<double> log_exit_terms_y(const LogZLattice& lat, const ReverseLattice& rev);

/// Partition function of the sub-rectangle with south-west corner `corner`
/// under the boundary conditions induced by lat: log Z_{m,n} - log Z_{corner}.
double conditioned_logZ(const LogZLattice& lat, Point corner);

enum class TotalMode { bulk, boundary };

/// log of the partition functions to every point of the line i+j = N:
///   boundary: log Z_{l,N-l}, l = 0..N (needs env.m, env.n >= N);
///   bulk:     log Z_{(1,1),(k,N-k)}, k = 1..N-1 (needs env.m, env.n >= N-1).
/// Only the triangle below the line is touched.
std::vector<double> antidiagonal_logZ(const Environment& env, int N, TotalMode mode);

/// log of the sum of antidiagonal_logZ.
double total_logZ(const Environment& env, int N, TotalMode mode);

// Streaming kernels: same values, bit for bit, as the dense routines applied
// to build_env / build_bulk_env with the same stream, but O(n) memory and the
// environment is drawn on the fly.

/// forward_logZ(build_env(m, n, p, rng)).total()
double stream_endpoint_logZ(int m, int n, const ModelParams& p, const RngStream& rng);
/// bulk_logZ(build_bulk_env(m, n, mu, rng), {1,1}).total()
double stream_bulk_endpoint_logZ(int m, int n, double mu, const RngStream& rng);
/// antidiagonal_logZ(build_env(N, N, p, rng), N, boundary)
std::vector<double> stream_boundary_antidiagonal(int N, const ModelParams& p, const RngStream& rng);
/// antidiagonal_logZ(build_bulk_env(N-1, N-1, mu, rng), N, bulk)
std::vector<double> stream_bulk_antidiagonal(int N, double mu, const RngStream& rng);

void write_lattice(std::ostream& os, const LogZLattice& lat, const Environment& env);
LogZLattice read_lattice(std::istream& is);
void save_lattice(const std::string& path, const LogZLattice& lat, const Environment& env);

}  // namespace lgp
