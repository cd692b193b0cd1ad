#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "lgp/specfun.hpp"

using namespace lgp;

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

// Shift to x+40, then the Stirling-type series: independent of the library's
// shift point and truncation.
double digamma_oracle(double x) {
    double acc = 0.0;
    while (x < 40.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double r2 = 1.0 / (x * x);
    return acc + std::log(x) - 0.5 / x - r2 / 12.0 + r2 * r2 / 120.0 - r2 * r2 * r2 / 252.0;
}

// sum_{k<K} (x+k)^-2 plus an Euler-Maclaurin tail.
double trigamma_oracle(double x) {
    constexpr int K = 2000;
    double s = 0.0;
    for (int k = K - 1; k >= 0; --k) s += 1.0 / ((x + k) * (x + k));
    const double y = x + K;
    return s + 1.0 / y + 0.5 / (y * y) + 1.0 / (6.0 * y * y * y) - 1.0 / (30.0 * std::pow(y, 5));
}

// Tail form of Phi with theta = 1: trapezoid rule on [0, 60] with the
// first Euler-Maclaurin end correction.
double phi1_trapezoid(double x) {
    constexpr int M = 1000000;
    const double h = 60.0 / M;
    double s = 0.0;
    for (int k = 0; k <= M; ++k) {
        const double u = k * h;
        const double f = (std::log(x + u) + kEulerGamma) * std::exp(-u);
        s += (k == 0 || k == M) ? 0.5 * f : f;
    }
    const auto df = [x](double u) { return (1.0 / (x + u) - std::log(x + u) - kEulerGamma) * std::exp(-u); };
    return (s * h - h * h / 12.0 * (df(60.0) - df(0.0))) / x;
}

// Lower-integral form with theta = 1 and y = x w^2, which removes the log
// singularity at the origin.
double phi1_lower_trapezoid(double x) {
    constexpr int M = 1000000;
    const double h = 1.0 / M;
    double s = 0.0;
    for (int k = 1; k <= M; ++k) {
        const double w = k * h;
        const double f = 2.0 * w * (-kEulerGamma - std::log(x) - 2.0 * std::log(w)) * std::exp(x * (1.0 - w * w));
        s += k == M ? 0.5 * f : f;
    }
    return s * h;
}

// E[Phi(theta, A)], A ~ Gamma(theta,1), with the substitution a = u^(1/theta).
double phi_gamma_expectation(double theta) {
    const auto f = [theta](double u) {
        const double a = std::max(std::pow(u, 1.0 / theta), std::numeric_limits<double>::min());
        if (a > 700.0) return 0.0;
        return phi(theta, a) * std::exp(-a) / (theta * std::tgamma(theta));
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    return ts.integrate(f, 0.0, 1.0) + es.integrate([&](double v) { return f(1.0 + v); });
}

}  // namespace

TEST_CASE("digamma and trigamma against independent series") {
    CHECK(digamma(1.0) == doctest::Approx(-kEulerGamma).epsilon(1e-13));
    CHECK(digamma(0.5) == doctest::Approx(-kEulerGamma - 2.0 * std::numbers::ln2).epsilon(1e-13));
    CHECK(trigamma(1.0) == doctest::Approx(std::numbers::pi * std::numbers::pi / 6.0).epsilon(1e-13));
    CHECK(trigamma(0.5) == doctest::Approx(std::numbers::pi * std::numbers::pi / 2.0).epsilon(1e-13));
    for (double x : {1e-3, 0.05, 0.3, 0.7, 1.5, 2.0, 3.3, 9.99, 10.0, 10.01, 47.0, 1e3, 1e6}) {
        CAPTURE(x);
        CHECK(std::abs(digamma(x) - digamma_oracle(x)) <= 1e-12 * std::max(1.0, std::abs(digamma(x))));
        CHECK(std::abs(digamma(x) - boost::math::digamma(x)) <= 1e-12 * std::max(1.0, std::abs(digamma(x))));
        CHECK(trigamma(x) == doctest::Approx(trigamma_oracle(x)).epsilon(1e-11));
        CHECK(trigamma(x) == doctest::Approx(boost::math::trigamma(x)).epsilon(1e-12));
    }
}

TEST_CASE("recurrences and monotonicity") {
    for (int k = 1; k <= 400; ++k) {
        const double x = 0.05 * k;
        CAPTURE(x);
        CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-10));
        CHECK(trigamma(x) - trigamma(x + 1.0) == doctest::Approx(1.0 / (x * x)).epsilon(1e-10));
        CHECK(digamma(x + 0.05) > digamma(x));
        CHECK(trigamma(x + 0.05) < trigamma(x));
        CHECK(trigamma(x) > 0.0);
    }
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(digamma(0.0), std::domain_error);
    CHECK_THROWS_AS(trigamma(-1.0), std::domain_error);
    CHECK_THROWS_AS(phi(1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(ModelParams(1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(ModelParams(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(char_rectangle(0.5, ModelParams(1.0, 2.0)), std::domain_error);
    CHECK_THROWS_AS(free_energy_pt(0.0, 0.0, 2.0), std::domain_error);
}

TEST_CASE("phi against trapezoid oracles") {
    for (double x : {0.01, 0.5, 1.0, 3.0, 50.0}) {
        CAPTURE(x);
        CHECK(phi(1.0, x) == doctest::Approx(phi1_trapezoid(x)).epsilon(1e-8));
    }
    for (double x : {0.01, 0.5, 1.0, 3.0}) {
        CAPTURE(x);
        CHECK(phi(1.0, x) == doctest::Approx(phi1_lower_trapezoid(x)).epsilon(1e-7));
    }
}

TEST_CASE("phi representations agree around the switch point") {
    for (double theta : {0.2, 0.5, 1.0, 1.7, 3.0, 5.0}) {
        const double s = detail::phi_switch_point(theta);
        for (double x : {0.25 * s, 0.5 * s, s, 1.5 * s, 2.0 * s}) {
            CAPTURE(theta);
            CAPTURE(x);
            CHECK(detail::phi_lower(theta, x) == doctest::Approx(detail::phi_tail(theta, x)).epsilon(1e-9));
        }
    }
}

TEST_CASE("phi is positive with the expected growth at both ends") {
    for (double theta : {0.1, 0.5, 1.0, 2.0, 8.0}) {
        for (double lx = -6.0; lx <= 3.0; lx += 0.25) {
            CAPTURE(theta);
            CAPTURE(lx);
            CHECK(phi(theta, std::pow(10.0, lx)) > 0.0);
        }
    }
    // Logarithmic near zero, at most x^-1/4 far out (in fact ~ log x / x).
    for (double x : {1e-8, 1e-6, 1e-4, 1e-2, 0.5}) {
        CHECK(phi(1.0, x) / (1.0 - std::log(x)) < 2.0);
    }
    for (double x : {1.0, 10.0, 100.0, 1000.0}) {
        CHECK(phi(1.0, x) * std::pow(x, 0.25) < 2.0);
    }
}

TEST_CASE("annealed phi equals trigamma") {
    for (double theta : {0.3, 0.5, 1.0, 2.0, 5.0}) {
        CAPTURE(theta);
        CHECK(phi_gamma_expectation(theta) == doctest::Approx(trigamma(theta)).epsilon(1e-4));
    }
}

TEST_CASE("characteristic direction") {
    CHECK(theta_char(1.0, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(theta_char(1.0, 1.0, 3.4) == doctest::Approx(1.7).epsilon(1e-12));
    for (double mu : {0.5, 2.0, 7.0}) {
        for (double s : {0.2, 1.0, 3.0}) {
            for (double t : {0.5, 1.0, 4.0}) {
                const double th = theta_char(s, t, mu);
                CAPTURE(mu);
                CAPTURE(s);
                CAPTURE(t);
                CHECK(th > 0.0);
                CHECK(th < mu);
                CHECK(std::abs(t * trigamma_oracle(mu - th) - s * trigamma_oracle(th)) <
                      1e-8 * (s * trigamma(th)));
                CHECK(theta_char(t, s, mu) == doctest::Approx(mu - th).epsilon(1e-9));
                CHECK(theta_char(2.0 * s, t, mu) > th);
            }
        }
    }
}

TEST_CASE("point-to-point free energy is the minimum over theta") {
    CHECK(free_energy_pt(1.0, 1.0, 2.0) == doctest::Approx(2.0 * kEulerGamma).epsilon(1e-12));
    for (double mu : {1.0, 2.0, 4.0}) {
        for (auto [s, t] : std::vector<std::pair<double, double>>{{1, 1}, {2, 1}, {0.3, 1.7}}) {
            double best = 1e300;
            const int G = 200000;
            for (int k = 1; k < G; ++k) {
                const double th = mu * k / G;
                best = std::min(best, -(s * boost::math::digamma(th) + t * boost::math::digamma(mu - th)));
            }
            const double f = free_energy_pt(s, t, mu);
            CAPTURE(mu);
            CAPTURE(s);
            CHECK(f <= best + 1e-12);
            CHECK(f == doctest::Approx(best).epsilon(1e-8));
        }
    }
    CHECK(free_energy_pt(0.0, 1.0, 2.0) == doctest::Approx(-digamma(2.0)));
    CHECK(free_energy_pt(1e-8, 1.0, 2.0) == doctest::Approx(-digamma(2.0)).epsilon(1e-3));
}

TEST_CASE("closed forms for the boundary model") {
    const ModelParams p(0.7, 1.5);
    CHECK(p.theta_dual() == doctest::Approx(0.8));
    CHECK(mean_logZ(20, 30, p) == doctest::Approx(-20 * boost::math::digamma(0.7) - 30 * boost::math::digamma(0.8)));
    CHECK(mean_logZ(0, 0, p) == 0.0);
    const ModelParams q(0.6, 2.0);
    CHECK(free_energy_boundary_total(q) == doctest::Approx(-boost::math::digamma(0.6)));
    CHECK(sigma2_boundary_total(q) == doctest::Approx(boost::math::trigamma(0.6)));
    CHECK(sigma2_boundary_total(ModelParams(1.5, 2.0)) == doctest::Approx(boost::math::trigamma(0.5)));

    const auto c = char_rectangle(100, ModelParams(1.0, 2.0));
    CHECK(c.m == 164);
    CHECK(c.n == 164);
    const auto small = char_rectangle(1.0, ModelParams(1.9, 2.0));
    CHECK(small.m >= 1);
    CHECK(small.n >= 1);
    const auto skew = char_rectangle(50, ModelParams(0.5, 2.0));
    CHECK(skew.m == static_cast<int>(std::floor(50 * trigamma(1.5))));
    CHECK(skew.n == static_cast<int>(std::floor(50 * trigamma(0.5))));
}
