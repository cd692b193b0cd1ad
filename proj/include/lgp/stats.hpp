#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace lgp {

/// Streaming mean and central moments up to order four (Welford / Pebay
/// updates). Merging is exact in exact arithmetic; callers that need
/// bit-reproducible output accumulate in a fixed order.
class Welford {
  public:
    void add(double x);
    void merge(const Welford& other);

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    /// Sample variance, n-1 denominator.
    double variance() const;
    double stderr_mean() const;
    /// Standard error of the sample variance from the fourth central moment.
    double stderr_variance() const;
    /// Central moments with 1/n normalisation.
    double central_moment2() const { return n_ ? m2_ / static_cast<double>(n_) : 0.0; }
    double central_moment4() const { return n_ ? m4_ / static_cast<double>(n_) : 0.0; }

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double m3_ = 0.0;
    double m4_ = 0.0;
};

struct McSummary {
    std::size_t n_reps = 0;
    double mean = 0.0;
    double variance = 0.0;
    double stderr_mean = 0.0;
    double stderr_variance = 0.0;
};

McSummary summarize(const Welford& w);
McSummary summarize(std::span<const double> xs);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double effective_n = 0.0;
};

/// Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

/// One-sample KS against a continuous CDF; asymptotic p-value with the
/// Stephens small-sample correction.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

KsResult two_sample_ks(std::vector<double> a, std::vector<double> b);

struct SlopeFit {
    std::vector<double> xs;
    std::vector<double> ys;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

/// Ordinary least squares y = a + b x. Needs at least 3 points with strictly
/// increasing xs; throws std::invalid_argument otherwise.
SlopeFit ols_slope(std::vector<double> xs, std::vector<double> ys);

/// Sample Pearson correlation.
double correlation(std::span<const double> a, std::span<const double> b);

double normal_cdf(double x);

/// Regularised incomplete beta I_x(a, b).
double beta_cdf(double a, double b, double x);

}  // namespace lgp
