#include "lgp/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

namespace lgp {

namespace {

void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error(std::string(what) + ": argument must be positive and finite, got " +
                                std::to_string(x));
    }
}

// Below this the asymptotic expansions are not accurate to 1e-13.
constexpr double kAsymptoticFrom = 10.0;

}  // namespace

ModelParams::ModelParams(double theta_, double mu_) : theta(theta_), mu(mu_) {
    if (!(theta > 0.0) || !(mu > theta) || !std::isfinite(mu)) {
        throw std::domain_error("ModelParams: need 0 < theta < mu < inf, got theta=" +
                                std::to_string(theta) + " mu=" + std::to_string(mu));
    }
}

double digamma(double x) {
    require_positive(x, "digamma");
    double acc = 0.0;
    while (x < kAsymptoticFrom) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double r2 = 1.0 / (x * x);
    // Bernoulli terms B_{2k} / (2k x^{2k}), k = 1..5
    const double series =
        r2 * (1.0 / 12 - r2 * (1.0 / 120 - r2 * (1.0 / 252 - r2 * (1.0 / 240 - r2 * (1.0 / 132)))));
    return acc + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
    require_positive(x, "trigamma");
    double acc = 0.0;
    while (x < kAsymptoticFrom) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double r = 1.0 / x;
    const double r2 = r * r;
    // B_{2k} / x^{2k+1}, k = 1..5
    const double series =
        r2 * r * (1.0 / 6 - r2 * (1.0 / 30 - r2 * (1.0 / 42 - r2 * (1.0 / 30 - r2 * (5.0 / 66)))));
    return acc + r + 0.5 * r2 + series;
}

namespace detail {

// x^-theta e^x [psi0(theta) gamma(theta,x) - d/da gamma(a,x)|_{a=theta}], with
// gamma(a,x) = x^a e^-x sum_k x^k / (a (a+1) ... (a+k)). Differentiating the
// series in a gives sum_k t_k (psi0(theta) - log x + H_k), H_k = sum_{j<=k} 1/(theta+j).
double phi_lower(double theta, double x) {
    require_positive(theta, "phi");
    require_positive(x, "phi");
    const double base = digamma(theta) - std::log(x);
    double term = 1.0 / theta;
    double harmonic = 1.0 / theta;
    double sum = term * (base + harmonic);
    for (int k = 1; k < 100000; ++k) {
        const double a = theta + k;
        term *= x / a;
        harmonic += 1.0 / a;
        const double contrib = term * (base + harmonic);
        sum += contrib;
        if (a > x && std::abs(contrib) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

// With y = x + u:
//   Phi = (1/x) int_0^inf (log(x+u) - psi0(theta)) (1+u/x)^(theta-1) e^-u du.
// The integrand is analytic except at u = -x, so panels [h(2^k-1), h(2^{k+1}-1)]
// with h = min(x,1) keep that point at least three half-widths from every panel.
double phi_tail(double theta, double x) {
    require_positive(theta, "phi");
    require_positive(x, "phi");
    const double psi = digamma(theta);
    const double tm1 = theta - 1.0;
    const auto integrand = [&](double u) {
        return (std::log(x + u) - psi) * std::exp(tm1 * std::log1p(u / x) - u);
    };
    using Rule = boost::math::quadrature::gauss<double, 20>;
    const double h = std::min(x, 1.0);
    double total = 0.0;
    double a = 0.0;
    double width = h;
    while (true) {
        const double b = a + width;
        const double part = Rule::integrate(integrand, a, b);
        total += part;
        if ((b > 40.0 && std::abs(part) < 1e-18 * std::abs(total)) || b > 2000.0) break;
        a = b;
        width *= 2.0;
    }
    return total / x;
}

}  // namespace detail

double phi(double theta, double x) {
    require_positive(theta, "phi");
    require_positive(x, "phi");
    return x <= detail::phi_switch_point(theta) ? detail::phi_lower(theta, x)
                                                : detail::phi_tail(theta, x);
}

double theta_char(double s, double t, double mu) {
    require_positive(s, "theta_char");
    require_positive(t, "theta_char");
    require_positive(mu, "theta_char");
    // Increasing in theta: trigamma(mu - theta) grows and trigamma(theta) shrinks.
    const auto excess = [&](double th) { return t * trigamma(mu - th) - s * trigamma(th); };
    const double eps = 1e-9 * mu;
    double lo = eps;
    double hi = mu - eps;
    if (excess(lo) >= 0.0) return lo;
    if (excess(hi) <= 0.0) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (excess(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double free_energy_pt(double s, double t, double mu) {
    if (!(s >= 0.0) || !(t >= 0.0) || (s == 0.0 && t == 0.0)) {
        throw std::domain_error("free_energy_pt: need s,t >= 0, not both zero");
    }
    require_positive(mu, "free_energy_pt");
    if (s == 0.0) return -t * digamma(mu);
    if (t == 0.0) return -s * digamma(mu);
    const double th = theta_char(s, t, mu);
    return -(s * digamma(th) + t * digamma(mu - th));
}

double free_energy_boundary_total(const ModelParams& p) {
    return std::max(-digamma(p.theta), -digamma(p.theta_dual()));
}

double sigma2_boundary_total(const ModelParams& p) {
    return trigamma(std::min(p.theta, p.theta_dual()));
}

double mean_logZ(long m, long n, const ModelParams& p) {
    if (m < 0 || n < 0) throw std::domain_error("mean_logZ: negative rectangle");
    return -static_cast<double>(m) * digamma(p.theta) -
           static_cast<double>(n) * digamma(p.theta_dual());
}

CharacteristicShape char_rectangle(double N, const ModelParams& p) {
    if (!(N >= 1.0) || !std::isfinite(N)) throw std::domain_error("char_rectangle: need N >= 1");
    const int m = std::max(1, static_cast<int>(std::floor(N * trigamma(p.theta_dual()))));
    const int n = std::max(1, static_cast<int>(std::floor(N * trigamma(p.theta))));
    return {N, m, n, 1.0};
}

}  // namespace lgp
