#include "lgp/polymer.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace lgp {

namespace {

constexpr double kSumTolerance = 1e-10;

// Exponentiates log-probabilities relative to logZ and renormalizes; a sum
// further than kSumTolerance from 1 means the lattices are inconsistent.
void normalize(std::vector<double>& probs, double& total, const char* what) {
    if (std::abs(total - 1.0) > kSumTolerance) {
        throw std::runtime_error(std::string(what) + ": probabilities sum to " + std::to_string(total));
    }
    for (auto& p : probs) p /= total;
}

void require_matching(const LogZLattice& lat, const ReverseLattice& rev, const char* what) {
    if (lat.origin() != rev.origin() || lat.corner() != rev.corner()) {
        throw std::invalid_argument(std::string(what) + ": forward and reverse lattices cover different rectangles");
    }
}

// Probability that the backward walk at (i,j) steps west to (i-1,j).
double west_probability(const LogZLattice& lat, int i, int j) {
    return 1.0 / (1.0 + std::exp(lat.at(i, j - 1) - lat.at(i - 1, j)));
}

}  // namespace

int PolymerPath::exit_x() const {
    int k = 0;
    while (k + 1 < static_cast<int>(points.size()) && points[k + 1].j == points[0].j) ++k;
    return k;
}

int PolymerPath::exit_y() const {
    int k = 0;
    while (k + 1 < static_cast<int>(points.size()) && points[k + 1].i == points[0].i) ++k;
    return k;
}

int PolymerPath::last_east_run() const {
    const int last = static_cast<int>(points.size()) - 1;
    int k = 0;
    while (k < last && points[last - k - 1].j == points[last].j) ++k;
    return k;
}

int PolymerPath::last_north_run() const {
    const int last = static_cast<int>(points.size()) - 1;
    int k = 0;
    while (k < last && points[last - k - 1].i == points[last].i) ++k;
    return k;
}

double CrossingDistribution::mean() const {
    double s = 0.0;
    for (std::size_t k = 0; k < pv.size(); ++k) s += pv[k] * static_cast<double>(first + static_cast<int>(k));
    return s;
}

double CrossingDistribution::variance() const {
    const double mu = mean();
    double s = 0.0;
    for (std::size_t k = 0; k < pv.size(); ++k) {
        const double d = static_cast<double>(first + static_cast<int>(k)) - mu;
        s += pv[k] * d * d;
    }
    return s;
}

PolymerPath sample_path(const LogZLattice& lat, RngStream& rng) {
    PolymerPath path;
    path.points.resize(static_cast<std::size_t>(lat.m - lat.i0 + lat.n - lat.j0 + 1));
    int i = lat.m, j = lat.n;
    for (auto k = path.points.size(); k-- > 0;) {
        path.points[k] = {i, j};
        if (k == 0) break;
        if (j == lat.j0) {
            --i;
        } else if (i == lat.i0) {
            --j;
        } else if (rng.uniform() < west_probability(lat, i, j)) {
            --i;
        } else {
            --j;
        }
    }
    return path;
}

std::array<double, 2> dual_kernel(const DualWeights& dual, const LogZLattice& lat, Point x) {
    if (x.i == lat.m && x.j == lat.n) throw std::invalid_argument("dual_kernel: no step from the corner");
    if (x.j == lat.n) return {1.0, 0.0};
    if (x.i == lat.m) return {0.0, 1.0};
    const double base = dual.at(x.i, x.j) + lat.at(x.i, x.j);
    return {std::exp(base - lat.at(x.i + 1, x.j)), std::exp(base - lat.at(x.i, x.j + 1))};
}

PolymerPath sample_dual_path(const DualWeights& dual, const LogZLattice& lat, RngStream& rng) {
    if (dual.corner() != lat.corner() || lat.i0 != 0 || lat.j0 != 0) {
        throw std::invalid_argument("sample_dual_path: dual weights and lattice differ");
    }
    PolymerPath path;
    path.points.reserve(static_cast<std::size_t>(lat.m + lat.n + 1));
    Point x{0, 0};
    path.points.push_back(x);
    while (!(x.i == lat.m && x.j == lat.n)) {
        const auto pi = dual_kernel(dual, lat, x);
        if (pi[1] == 0.0 || (pi[0] != 0.0 && rng.uniform() < pi[0])) {
            ++x.i;
        } else {
            ++x.j;
        }
        path.points.push_back(x);
    }
    return path;
}

double dual_exit_at_least(const DualWeights& dual, const LogZLattice& lat, int k) {
    if (k <= 0) return 1.0;
    if (k > lat.m) return 0.0;
    double lp = 0.0;
    for (int i = 0; i < k; ++i) {
        if (lat.n == 0) continue;
        lp += dual.at(i, 0) + lat.at(i, 0) - lat.at(i + 1, 0);
    }
    return std::exp(lp);
}

double last_steps_east_probability(const LogZLattice& lat, const Environment& env, int k) {
    if (k <= 0) return 1.0;
    const int m = lat.m, n = lat.n;
    if (k > m - lat.i0) return 0.0;
    double lp = lat.at(m - k, n) - lat.total();
    for (int i = m - k + 1; i <= m; ++i) lp += env.log_weight(i, n);
    return std::exp(lp);
}

double last_step_probability(const LogZLattice& lat) {
    const int m = lat.m, n = lat.n;
    if (m <= lat.i0 || n <= lat.j0) throw std::invalid_argument("last_step_probability: needs m, n >= 1");
    const double inv_u = lat.at(m - 1, n) - lat.at(m, n);
    const double inv_v = lat.at(m, n - 1) - lat.at(m, n);
    return 1.0 / (1.0 + std::exp(inv_v - inv_u));
}

ExitDistribution exit_distribution(const LogZLattice& lat, const ReverseLattice& rev) {
    require_matching(lat, rev, "exit_distribution");
    const double logz = lat.total();
    ExitDistribution exd;
    exd.px = log_exit_terms_x(lat, rev);
    exd.py = log_exit_terms_y(lat, rev);
    double total = 0.0;
    for (auto& p : exd.px) total += (p = std::exp(p - logz));
    for (auto& p : exd.py) total += (p = std::exp(p - logz));
    if (exd.px.empty() && exd.py.empty()) return exd;
    normalize(exd.px, total, "exit_distribution");
    for (auto& p : exd.py) p /= total;
    return exd;
}

double exit_phi_expectation_x(const Environment& env, const ExitDistribution& exd) {
    if (!env.has_boundary) throw std::invalid_argument("exit_phi_expectation_x: boundary environment required");
    double prefix = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < exd.px.size(); ++k) {
        prefix += phi(env.theta, std::exp(-env.log_u0[k]));
        acc += exd.px[k] * prefix;
    }
    return acc;
}

double exit_phi_expectation_y(const Environment& env, const ExitDistribution& exd) {
    if (!env.has_boundary) throw std::invalid_argument("exit_phi_expectation_y: boundary environment required");
    double prefix = 0.0, acc = 0.0;
    for (std::size_t l = 0; l < exd.py.size(); ++l) {
        prefix += phi(env.mu - env.theta, std::exp(-env.log_v0[l]));
        acc += exd.py[l] * prefix;
    }
    return acc;
}

CrossingDistribution crossing_distribution(int level, const LogZLattice& lat, const ReverseLattice& rev) {
    require_matching(lat, rev, "crossing_distribution");
    if (level < lat.j0 || level >= lat.n) throw std::invalid_argument("crossing_distribution: level out of range");
    const double logz = lat.total();
    CrossingDistribution cd;
    cd.level = level;
    cd.first = lat.i0;
    cd.pv.resize(static_cast<std::size_t>(lat.m - lat.i0 + 1));
    double total = 0.0;
    for (int i = lat.i0; i <= lat.m; ++i) {
        const double p = std::exp(lat.at(i, level) + rev.at(i, level + 1) - logz);
        cd.pv[i - lat.i0] = p;
        total += p;
    }
    normalize(cd.pv, total, "crossing_distribution");
    return cd;
}

PathFunctionals path_functionals(const PolymerPath& path) {
    if (path.points.empty()) throw std::invalid_argument("path_functionals: empty path");
    const Point o = path.points.front();
    const Point c = path.points.back();
    PathFunctionals f;
    f.v_min.assign(c.j + 1, -1);
    f.v_max.assign(c.j + 1, -1);
    f.w_min.assign(c.i + 1, -1);
    f.w_max.assign(c.i + 1, -1);
    for (std::size_t k = 0; k < path.points.size(); ++k) {
        const Point x = path.points[k];
        if (k > 0) {
            const Point d{x.i - path.points[k - 1].i, x.j - path.points[k - 1].j};
            if (!((d.i == 1 && d.j == 0) || (d.i == 0 && d.j == 1))) {
                throw std::invalid_argument("path_functionals: not an up-right path");
            }
        }
        if (f.v_min[x.j] < 0) f.v_min[x.j] = x.i;
        f.v_max[x.j] = x.i;
        if (f.w_min[x.i] < 0) f.w_min[x.i] = x.j;
        f.w_max[x.i] = x.j;
    }
    f.exit_x = f.v_max[o.j] - o.i;
    f.exit_y = f.w_max[o.i] - o.j;
    return f;
}

void write_path_csv(std::ostream& os, const PolymerPath& path) {
    os << "k,i,j\n";
    for (std::size_t k = 0; k < path.points.size(); ++k) {
        os << k << ',' << path.points[k].i << ',' << path.points[k].j << '\n';
    }
}

void write_distribution_csv(std::ostream& os, std::span<const double> probs, int first) {
    os << "index,probability\n";
    const auto old = os.precision(17);
    for (std::size_t k = 0; k < probs.size(); ++k) os << first + static_cast<int>(k) << ',' << probs[k] << '\n';
    os.precision(old);
}

}  // namespace lgp
