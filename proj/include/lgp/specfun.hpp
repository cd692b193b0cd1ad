#pragma once

// Special functions and closed-form quantities of the log-gamma polymer.

namespace lgp {

/// Shape parameters of the boundary (theta) and bulk (mu) weights.
///
/// Reciprocal weights are Gamma(theta,1) on the x-axis, Gamma(mu-theta,1) on
/// the y-axis and Gamma(mu,1) in the bulk. The gamma scale is fixed to 1.
struct ModelParams {
    double theta;
    double mu;

    ModelParams(double theta_, double mu_);

    double theta_dual() const { return mu - theta; }
};

/// Endpoint of a rectangle close to the characteristic direction.
struct CharacteristicShape {
    double N;
    int m;
    int n;
    double gamma_dev;
};

double digamma(double x);
double trigamma(double x);

/// Kernel of the exit-point variance identity:
///   Phi(theta, x) = int_0^x (psi0(theta) - log y) x^-theta y^(theta-1) e^(x-y) dy.
/// Dispatches between the lower-integral and tail representations.
double phi(double theta, double x);

namespace detail {
// Lower-integral representation, summed as a positive-term series.
double phi_lower(double theta, double x);
// Tail representation int_x^inf, integrated by Gauss-Legendre panels.
double phi_tail(double theta, double x);
// Argument above which phi() uses the tail representation.
inline double phi_switch_point(double theta) { return theta > 1.0 ? theta : 1.0; }
}  // namespace detail

/// Unique theta in (0, mu) with trigamma(mu-theta)/trigamma(theta) = s/t.
double theta_char(double s, double t, double mu);

/// Point-to-point free energy of the polymer without boundaries in
/// direction (s, t).
double free_energy_pt(double s, double t, double mu);

/// Free energy of the boundary model with free endpoint on the line x+y=N:
/// max(-psi0(theta), -psi0(mu-theta)).
double free_energy_boundary_total(const ModelParams& p);

/// Variance of the limit law of the boundary model with free endpoint,
/// trigamma(min(theta, mu-theta)).
double sigma2_boundary_total(const ModelParams& p);

/// E[log Z_{m,n}] = -m psi0(theta) - n psi0(mu-theta).
double mean_logZ(long m, long n, const ModelParams& p);

CharacteristicShape char_rectangle(double N, const ModelParams& p);

}  // namespace lgp
