#include "lgp/lattice.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "lgp/binio.hpp"

namespace lgp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint32_t kLatticeVersion = 1;

void check_inside(const Environment& env, Point p, const char* what) {
    if (p.i < 0 || p.j < 0 || p.i > env.m || p.j > env.n) {
        throw std::out_of_range(std::string(what) + ": point outside the environment");
    }
}

// Edges are cumulative sums; the interior is filled row by row (sequential)
// or by antidiagonals with the cells of one antidiagonal in parallel. Both
// evaluate the identical expression per cell, so the results agree bitwise.
void fill_forward(LogZLattice& lat, const Environment& env, DpMode mode) {
    const int i0 = lat.i0, j0 = lat.j0, m = lat.m, n = lat.n;
    lat.at(i0, j0) = 0.0;
    for (int j = j0 + 1; j <= n; ++j) lat.at(i0, j) = lat.at(i0, j - 1) + env.log_weight(i0, j);
    for (int i = i0 + 1; i <= m; ++i) lat.at(i, j0) = lat.at(i - 1, j0) + env.log_weight(i, j0);
    if (m == i0 || n == j0) return;

    const int w = lat.width();
    double* z = lat.v.data();
    if (mode == DpMode::sequential) {
        for (int i = i0 + 1; i <= m; ++i) {
            const double* up = z + static_cast<std::size_t>(i - 1 - i0) * w;
            double* cur = z + static_cast<std::size_t>(i - i0) * w;
            const double* wy = &env.log_y[static_cast<std::size_t>(i - 1) * env.n + j0];
            for (int b = 1; b < w; ++b) cur[b] = wy[b - 1] + log_add(up[b], cur[b - 1]);
        }
        return;
    }

    const int rows = m - i0;
    const int cols = n - j0;
#pragma omp parallel
    for (int s = 2; s <= rows + cols; ++s) {
        const int a_lo = std::max(1, s - cols);
        const int a_hi = std::min(rows, s - 1);
#pragma omp for schedule(static)
        for (int a = a_lo; a <= a_hi; ++a) {
            const int b = s - a;
            const std::size_t k = static_cast<std::size_t>(a) * w + b;
            const double wy = env.bulk(i0 + a, j0 + b);
            z[k] = wy + log_add(z[k - w], z[k - 1]);
        }
    }
}

}  // namespace

double log_sum_exp(std::span<const double> xs) {
    double mx = kNegInf;
    for (double x : xs) mx = std::max(mx, x);
    if (mx == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

LatticeField::LatticeField(Point origin, Point corner, double fill)
    : i0(origin.i), j0(origin.j), m(corner.i), n(corner.j) {
    if (corner.i < origin.i || corner.j < origin.j) throw std::invalid_argument("LatticeField: empty rectangle");
    v.assign(static_cast<std::size_t>(m - i0 + 1) * static_cast<std::size_t>(n - j0 + 1), fill);
}

LogZLattice forward_logZ(const Environment& env, DpMode mode) {
    if (!env.has_boundary) throw std::invalid_argument("forward_logZ: environment has no boundary, use bulk_logZ");
    LogZLattice lat({0, 0}, {env.m, env.n}, 0.0);
    fill_forward(lat, env, mode);
    return lat;
}

LogZLattice bulk_logZ(const Environment& env, Point start, DpMode mode) {
    check_inside(env, start, "bulk_logZ");
    if (start.i < 1 || start.j < 1) throw std::invalid_argument("bulk_logZ: start must be >= (1,1)");
    LogZLattice lat(start, {env.m, env.n}, 0.0);
    fill_forward(lat, env, mode);
    return lat;
}

ReverseLattice reverse_logW(const Environment& env, Point endpoint) {
    check_inside(env, endpoint, "reverse_logW");
    const Point origin = env.has_boundary ? Point{0, 0} : Point{1, 1};
    if (endpoint.i < origin.i || endpoint.j < origin.j) {
        throw std::invalid_argument("reverse_logW: endpoint below the lattice origin");
    }
    ReverseLattice rev(origin, endpoint, 0.0);
    const int m = endpoint.i, n = endpoint.j;
    rev.at(m, n) = env.log_weight(m, n);
    for (int j = n - 1; j >= origin.j; --j) rev.at(m, j) = rev.at(m, j + 1) + env.log_weight(m, j);
    for (int i = m - 1; i >= origin.i; --i) {
        rev.at(i, n) = rev.at(i + 1, n) + env.log_weight(i, n);
        for (int j = n - 1; j >= origin.j; --j) {
            rev.at(i, j) = env.log_weight(i, j) + log_add(rev.at(i + 1, j), rev.at(i, j + 1));
        }
    }
    return rev;
}

RatioFields ratio_fields(const LogZLattice& lat) {
    RatioFields r{LatticeField(lat.origin(), lat.corner(), kNaN), LatticeField(lat.origin(), lat.corner(), kNaN)};
    for (int i = lat.i0; i <= lat.m; ++i) {
        for (int j = lat.j0; j <= lat.n; ++j) {
            if (i > lat.i0) r.logu.at(i, j) = lat.at(i, j) - lat.at(i - 1, j);
            if (j > lat.j0) r.logv.at(i, j) = lat.at(i, j) - lat.at(i, j - 1);
        }
    }
    return r;
}

DualWeights dual_weights(const LogZLattice& lat, const Environment& env) {
    if (lat.i0 != 0 || lat.j0 != 0 || !env.has_boundary) {
        throw std::invalid_argument("dual_weights: needs a boundary lattice rooted at the origin");
    }
    const RatioFields r = ratio_fields(lat);
    const int m = lat.m, n = lat.n;
    DualWeights x({0, 0}, {m, n}, kNaN);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            x.at(i, j) = -log_add(-r.logu.at(i + 1, j), -r.logv.at(i, j + 1));
        }
    }
    for (int i = 0; i < m; ++i) x.at(i, n) = r.logu.at(i + 1, n);
    for (int j = 0; j < n; ++j) x.at(m, j) = r.logv.at(m, j + 1);
    return x;
}

LogZLattice star_lattice(const LogZLattice& lat) {
    if (lat.i0 != 0 || lat.j0 != 0) throw std::invalid_argument("star_lattice: lattice must be rooted at the origin");
    LogZLattice star({0, 0}, {lat.m, lat.n}, 0.0);
    const double total = lat.total();
    for (int i = 0; i <= lat.m; ++i) {
        for (int j = 0; j <= lat.n; ++j) star.at(i, j) = total - lat.at(lat.m - i, lat.n - j);
    }
    return star;
}

Environment reversed_environment(const LogZLattice& lat, const Environment& env) {
    const DualWeights x = dual_weights(lat, env);
    const RatioFields r = ratio_fields(lat);
    const int m = lat.m, n = lat.n;
    Environment out;
    out.m = m;
    out.n = n;
    out.has_boundary = true;
    out.seed = env.seed;
    out.stream_id = env.stream_id;
    out.theta = env.theta;
    out.mu = env.mu;
    out.log_u0.resize(m);
    out.log_v0.resize(n);
    out.log_y.resize(static_cast<std::size_t>(m) * n);
    for (int i = 1; i <= m; ++i) out.log_u0[i - 1] = r.logu.at(m - i + 1, n);
    for (int j = 1; j <= n; ++j) out.log_v0[j - 1] = r.logv.at(m, n - j + 1);
    for (int i = 1; i <= m; ++i) {
        for (int j = 1; j <= n; ++j) out.bulk(i, j) = x.at(m - i, n - j);
    }
    return out;
}

std::vector<double> log_exit_terms_x(const LogZLattice& lat, const ReverseLattice& rev) {
    if (lat.i0 != 0 || lat.j0 != 0 || rev.i0 != 0 || rev.j0 != 0) {
        throw std::invalid_argument("log_exit_terms_x: needs boundary lattices");
    }
    const int m = rev.m, n = rev.n;
    if (m > lat.m || n > lat.n) throw std::invalid_argument("log_exit_terms_x: forward lattice too small");
    std::vector<double> terms(m, kNegInf);
    if (n == 0) {
        if (m > 0) terms[m - 1] = lat.at(m, 0);
        return terms;
    }
    for (int s = 1; s <= m; ++s) terms[s - 1] = lat.at(s, 0) + rev.at(s, 1);
    return terms;
}

std::vector<double> log_exit_terms_y(const LogZLattice& lat, const ReverseLattice& rev) {
    if (lat.i0 != 0 || lat.j0 != 0 || rev.i0 != 0 || rev.j0 != 0) {
        throw std::invalid_argument("log_exit_terms_y: needs boundary lattices");
    }
    const int m = rev.m, n = rev.n;
    if (m > lat.m || n > lat.n) throw std::invalid_argument("log_exit_terms_y: forward lattice too small");
    std::vector<double> terms(n, kNegInf);
    if (m == 0) {
        if (n > 0) terms[n - 1] = lat.at(0, n);
        return terms;
    }
    for (int t = 1; t <= n; ++t) terms[t - 1] = lat.at(0, t) + rev.at(1, t);
    return terms;
}

double restricted_logZ_x(const LogZLattice& lat, const ReverseLattice& rev, int k) {
    if (k < 1) throw std::invalid_argument("restricted_logZ_x: k >= 1");
    const auto terms = log_exit_terms_x(lat, rev);
    if (k > static_cast<int>(terms.size())) return kNegInf;
    return log_sum_exp(std::span<const double>(terms).subspan(k - 1));
}

double restricted_logZ_y(const LogZLattice& lat, const ReverseLattice& rev, int k) {
    if (k < 1) throw std::invalid_argument("restricted_logZ_y: k >= 1");
    const auto terms = log_exit_terms_y(lat, rev);
    if (k > static_cast<int>(terms.size())) return kNegInf;
    return log_sum_exp(std::span<const double>(terms).subspan(k - 1));
}

double conditioned_logZ(const LogZLattice& lat, Point corner) {
    if (corner.i < lat.i0 || corner.j < lat.j0 || corner.i > lat.m || corner.j > lat.n) {
        throw std::out_of_range("conditioned_logZ: corner outside the lattice");
    }
    return lat.total() - lat.at(corner.i, corner.j);
}

std::vector<double> antidiagonal_logZ(const Environment& env, int N, TotalMode mode) {
    if (mode == TotalMode::boundary) {
        if (!env.has_boundary) throw std::invalid_argument("antidiagonal_logZ: boundary mode needs a boundary environment");
        if (N < 1 || env.m < N || env.n < N) throw std::invalid_argument("antidiagonal_logZ: environment too small");
        std::vector<double> row(N + 1), out(N + 1);
        row[0] = 0.0;
        for (int j = 1; j <= N; ++j) row[j] = row[j - 1] + env.log_v0[j - 1];
        out[0] = row[N];
        for (int i = 1; i <= N; ++i) {
            row[0] = row[0] + env.log_u0[i - 1];
            for (int j = 1; j <= N - i; ++j) row[j] = env.bulk(i, j) + log_add(row[j], row[j - 1]);
            out[i] = row[N - i];
        }
        return out;
    }
    if (N < 2 || env.m < N - 1 || env.n < N - 1) throw std::invalid_argument("antidiagonal_logZ: environment too small");
    std::vector<double> row(N), out(N - 1);
    row[1] = 0.0;
    for (int j = 2; j <= N - 1; ++j) row[j] = row[j - 1] + env.bulk(1, j);
    out[0] = row[N - 1];
    for (int i = 2; i <= N - 1; ++i) {
        row[1] = row[1] + env.bulk(i, 1);
        for (int j = 2; j <= N - i; ++j) row[j] = env.bulk(i, j) + log_add(row[j], row[j - 1]);
        out[i - 1] = row[N - i];
    }
    return out;
}

double total_logZ(const Environment& env, int N, TotalMode mode) {
    return log_sum_exp(antidiagonal_logZ(env, N, mode));
}

double stream_endpoint_logZ(int m, int n, const ModelParams& p, const RngStream& rng) {
    if (m < 0 || n < 0) throw std::domain_error("stream_endpoint_logZ: negative dimensions");
    std::vector<double> row(n + 1);
    RngStream sv = rng.substream(env_substream::kColumnV);
    row[0] = 0.0;
    for (int j = 1; j <= n; ++j) row[j] = row[j - 1] + -sample_log_gamma(p.theta_dual(), sv);
    RngStream su = rng.substream(env_substream::kRowU);
    for (int i = 1; i <= m; ++i) {
        RngStream sy = rng.substream(env_substream::bulk_row(i));
        row[0] = row[0] + -sample_log_gamma(p.theta, su);
        for (int j = 1; j <= n; ++j) {
            const double wy = -sample_log_gamma(p.mu, sy);
            row[j] = wy + log_add(row[j], row[j - 1]);
        }
    }
    return row[n];
}

double stream_bulk_endpoint_logZ(int m, int n, double mu, const RngStream& rng) {
    if (m < 1 || n < 1) throw std::domain_error("stream_bulk_endpoint_logZ: need m, n >= 1");
    std::vector<double> row(n + 1);
    {
        RngStream sy = rng.substream(env_substream::bulk_row(1));
        (void)sample_log_gamma(mu, sy);  // Y_{1,1} is excluded but still drawn
        row[1] = 0.0;
        for (int j = 2; j <= n; ++j) row[j] = row[j - 1] + -sample_log_gamma(mu, sy);
    }
    for (int i = 2; i <= m; ++i) {
        RngStream sy = rng.substream(env_substream::bulk_row(i));
        row[1] = row[1] + -sample_log_gamma(mu, sy);
        for (int j = 2; j <= n; ++j) {
            const double wy = -sample_log_gamma(mu, sy);
            row[j] = wy + log_add(row[j], row[j - 1]);
        }
    }
    return row[n];
}

std::vector<double> stream_boundary_antidiagonal(int N, const ModelParams& p, const RngStream& rng) {
    if (N < 1) throw std::domain_error("stream_boundary_antidiagonal: N >= 1");
    std::vector<double> row(N + 1), out(N + 1);
    RngStream sv = rng.substream(env_substream::kColumnV);
    row[0] = 0.0;
    for (int j = 1; j <= N; ++j) row[j] = row[j - 1] + -sample_log_gamma(p.theta_dual(), sv);
    out[0] = row[N];
    RngStream su = rng.substream(env_substream::kRowU);
    for (int i = 1; i <= N; ++i) {
        RngStream sy = rng.substream(env_substream::bulk_row(i));
        row[0] = row[0] + -sample_log_gamma(p.theta, su);
        for (int j = 1; j <= N - i; ++j) {
            const double wy = -sample_log_gamma(p.mu, sy);
            row[j] = wy + log_add(row[j], row[j - 1]);
        }
        out[i] = row[N - i];
    }
    return out;
}

std::vector<double> stream_bulk_antidiagonal(int N, double mu, const RngStream& rng) {
    if (N < 2) throw std::domain_error("stream_bulk_antidiagonal: N >= 2");
    std::vector<double> row(N), out(N - 1);
    {
        RngStream sy = rng.substream(env_substream::bulk_row(1));
        (void)sample_log_gamma(mu, sy);
        row[1] = 0.0;
        for (int j = 2; j <= N - 1; ++j) row[j] = row[j - 1] + -sample_log_gamma(mu, sy);
    }
    out[0] = row[N - 1];
    for (int i = 2; i <= N - 1; ++i) {
        RngStream sy = rng.substream(env_substream::bulk_row(i));
        row[1] = row[1] + -sample_log_gamma(mu, sy);
        for (int j = 2; j <= N - i; ++j) {
            const double wy = -sample_log_gamma(mu, sy);
            row[j] = wy + log_add(row[j], row[j - 1]);
        }
        out[i - 1] = row[N - i];
    }
    return out;
}

void write_lattice(std::ostream& os, const LogZLattice& lat, const Environment& env) {
    binio::put_magic(os, "LGPZ");
    binio::put_u32(os, kLatticeVersion);
    binio::put_u64(os, static_cast<std::uint64_t>(lat.m));
    binio::put_u64(os, static_cast<std::uint64_t>(lat.n));
    std::uint64_t flags = env.has_boundary ? 1u : 0u;
    if (lat.i0 == 1 && lat.j0 == 1) flags |= 2u;
    binio::put_u64(os, flags);
    binio::put_u64(os, env.seed);
    binio::put_u64(os, env.stream_id);
    binio::put_f64(os, env.theta);
    binio::put_f64(os, env.mu);
    for (double z : lat.v) binio::put_f64(os, z);
}

LogZLattice read_lattice(std::istream& is) {
    binio::expect_magic(is, "LGPZ");
    if (binio::get_u32(is) != kLatticeVersion) throw std::runtime_error("read_lattice: unsupported version");
    const int m = static_cast<int>(binio::get_u64(is));
    const int n = static_cast<int>(binio::get_u64(is));
    const auto flags = binio::get_u64(is);
    (void)binio::get_u64(is);
    (void)binio::get_u64(is);
    (void)binio::get_f64(is);
    (void)binio::get_f64(is);
    const Point origin = (flags & 2u) ? Point{1, 1} : Point{0, 0};
    LogZLattice lat(origin, {m, n}, 0.0);
    for (auto& z : lat.v) z = binio::get_f64(is);
    return lat;
}

void save_lattice(const std::string& path, const LogZLattice& lat, const Environment& env) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_lattice: cannot open " + path);
    write_lattice(os, lat, env);
}

}  // namespace lgp
