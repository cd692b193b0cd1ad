#include "lgp/randenv.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "lgp/binio.hpp"

namespace lgp {

namespace {

constexpr std::uint32_t kEnvVersion = 1;

void require_dims(int m, int n) {
    if (m < 0 || n < 0) throw std::domain_error("environment: negative dimensions");
}

}  // namespace

// Marsaglia-Tsang squeeze method for shape >= 1; shape < 1 is boosted through
// G_a = G_{a+1} U^{1/a}, applied in log space.
double sample_log_gamma(double shape, RngStream& rng) {
    if (!(shape > 0.0) || !std::isfinite(shape)) {
        throw std::domain_error("sample_gamma: shape must be positive, got " + std::to_string(shape));
    }
    const double a = shape < 1.0 ? shape + 1.0 : shape;
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    double v = 0.0;
    while (true) {
        double z, x;
        do {
            z = rng.normal();
            x = 1.0 + c * z;
        } while (x <= 0.0);
        v = x * x * x;
        const double u = rng.uniform();
        const double z2 = z * z;
        if (u < 1.0 - 0.0331 * z2 * z2) break;
        if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) break;
    }
    double lg = std::log(d * v);
    if (shape < 1.0) lg += std::log(rng.uniform()) / shape;
    return lg;
}

double sample_gamma(double shape, RngStream& rng) { return std::exp(sample_log_gamma(shape, rng)); }

Environment build_env(int m, int n, const ModelParams& p, const RngStream& rng) {
    require_dims(m, n);
    Environment env;
    env.m = m;
    env.n = n;
    env.has_boundary = true;
    env.seed = rng.master_seed();
    env.stream_id = rng.stream_id();
    env.theta = p.theta;
    env.mu = p.mu;
    env.log_u0.resize(m);
    env.log_v0.resize(n);
    env.log_y.resize(static_cast<std::size_t>(m) * n);

    RngStream su = rng.substream(env_substream::kRowU);
    for (auto& w : env.log_u0) w = -sample_log_gamma(p.theta, su);
    RngStream sv = rng.substream(env_substream::kColumnV);
    for (auto& w : env.log_v0) w = -sample_log_gamma(p.theta_dual(), sv);
    for (int i = 1; i <= m; ++i) {
        RngStream sy = rng.substream(env_substream::bulk_row(i));
        for (int j = 1; j <= n; ++j) env.bulk(i, j) = -sample_log_gamma(p.mu, sy);
    }
    return env;
}

Environment build_bulk_env(int m, int n, double mu, const RngStream& rng) {
    require_dims(m, n);
    if (!(mu > 0.0)) throw std::domain_error("build_bulk_env: mu must be positive");
    Environment env;
    env.m = m;
    env.n = n;
    env.has_boundary = false;
    env.seed = rng.master_seed();
    env.stream_id = rng.stream_id();
    env.mu = mu;
    env.log_y.resize(static_cast<std::size_t>(m) * n);
    for (int i = 1; i <= m; ++i) {
        RngStream sy = rng.substream(env_substream::bulk_row(i));
        for (int j = 1; j <= n; ++j) env.bulk(i, j) = -sample_log_gamma(mu, sy);
    }
    return env;
}

Environment perturb_boundary_ordered(const Environment& env, double delta) {
    if (!env.has_boundary) throw std::invalid_argument("perturb_boundary_ordered: environment has no boundary");
    Environment out = env;
    for (auto& w : out.log_u0) w -= delta;
    for (auto& w : out.log_v0) w += delta;
    return out;
}

Environment constant_env(int m, int n, double log_w, bool with_boundary) {
    require_dims(m, n);
    Environment env;
    env.m = m;
    env.n = n;
    env.has_boundary = with_boundary;
    if (with_boundary) {
        env.log_u0.assign(m, log_w);
        env.log_v0.assign(n, log_w);
    }
    env.log_y.assign(static_cast<std::size_t>(m) * n, log_w);
    return env;
}

void write_env(std::ostream& os, const Environment& env) {
    binio::put_magic(os, "LGPE");
    binio::put_u32(os, kEnvVersion);
    binio::put_u64(os, static_cast<std::uint64_t>(env.m));
    binio::put_u64(os, static_cast<std::uint64_t>(env.n));
    binio::put_u64(os, env.has_boundary ? 1u : 0u);
    binio::put_u64(os, env.seed);
    binio::put_u64(os, env.stream_id);
    binio::put_f64(os, env.theta);
    binio::put_f64(os, env.mu);
    for (double w : env.log_u0) binio::put_f64(os, w);
    for (double w : env.log_v0) binio::put_f64(os, w);
    for (double w : env.log_y) binio::put_f64(os, w);
}

Environment read_env(std::istream& is) {
    binio::expect_magic(is, "LGPE");
    const auto version = binio::get_u32(is);
    if (version != kEnvVersion) throw std::runtime_error("read_env: unsupported version " + std::to_string(version));
    Environment env;
    env.m = static_cast<int>(binio::get_u64(is));
    env.n = static_cast<int>(binio::get_u64(is));
    env.has_boundary = (binio::get_u64(is) & 1u) != 0;
    env.seed = binio::get_u64(is);
    env.stream_id = binio::get_u64(is);
    env.theta = binio::get_f64(is);
    env.mu = binio::get_f64(is);
    if (env.has_boundary) {
        env.log_u0.resize(env.m);
        env.log_v0.resize(env.n);
        for (auto& w : env.log_u0) w = binio::get_f64(is);
        for (auto& w : env.log_v0) w = binio::get_f64(is);
    }
    env.log_y.resize(static_cast<std::size_t>(env.m) * env.n);
    for (auto& w : env.log_y) w = binio::get_f64(is);
    return env;
}

void save_env(const std::string& path, const Environment& env) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_env: cannot open " + path);
    write_env(os, env);
}

Environment load_env(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_env: cannot open " + path);
    return read_env(is);
}

}  // namespace lgp
