#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "lgp/lattice.hpp"

namespace lgp {

/// Up-right lattice path x_0, ..., x_{m+n}.
struct PolymerPath {
    std::vector<Point> points;

    /// Number of initial steps along the x-axis (first row of the lattice).
    int exit_x() const;
    /// Number of initial steps along the y-axis (first column).
    int exit_y() const;
    /// Number of final east steps, taken along the top row.
    int last_east_run() const;
    /// Number of final north steps, taken along the right column.
    int last_north_run() const;
};

/// px[k-1] = Q(xi_x = k), k = 1..m and py[l-1] = Q(xi_y = l), l = 1..n.
struct ExitDistribution {
    std::vector<double> px;
    std::vector<double> py;
};

/// Law of the rightmost point of the path on row `level`: pv[i - first] is the
/// probability that the path steps from (i, level) to (i, level+1).
struct CrossingDistribution {
    int level = 0;
    int first = 0;
    std::vector<double> pv;

    double mean() const;
    double variance() const;
};

/// Leftmost/rightmost points of the path on each row and lowest/highest on
/// each column, indexed by absolute coordinate. Entries outside the path's
/// rectangle are -1.
struct PathFunctionals {
    std::vector<int> v_min;  // v(j)
    std::vector<int> v_max;  // v-bar(j)
    std::vector<int> w_min;  // w(i)
    std::vector<int> w_max;  // w-bar(i)
    int exit_x = 0;
    int exit_y = 0;
};

/// Exact draw from the quenched polymer measure on paths from the lattice
/// origin to its corner, walking back from the corner.
PolymerPath sample_path(const LogZLattice& lat, RngStream& rng);

/// Transition probabilities (east, north) of the dual Markov kernel at x,
/// evaluated from the dual weights. On the north and east edges the only
/// admissible step gets probability 1.
std::array<double, 2> dual_kernel(const DualWeights& dual, const LogZLattice& lat, Point x);

/// Exact draw from the dual measure, forward from the origin.
PolymerPath sample_dual_path(const DualWeights& dual, const LogZLattice& lat, RngStream& rng);

/// Q*(xi_x >= k) under the dual measure.
double dual_exit_at_least(const DualWeights& dual, const LogZLattice& lat, int k);

/// Q(last k steps are east steps along the top row).
double last_steps_east_probability(const LogZLattice& lat, const Environment& env, int k);

/// Q(last step is east) = U^-1 / (U^-1 + V^-1) at the corner.
double last_step_probability(const LogZLattice& lat);

/// Exit-point law from the forward and reverse lattices of a boundary
/// environment. Throws std::runtime_error if the probabilities do not sum to 1
/// within 1e-10.
ExitDistribution exit_distribution(const LogZLattice& lat, const ReverseLattice& rev);

/// E^Q[sum_{i <= xi_x} Phi(theta, U_{i,0}^-1)].
double exit_phi_expectation_x(const Environment& env, const ExitDistribution& exd);
/// E^Q[sum_{j <= xi_y} Phi(mu - theta, V_{0,j}^-1)].
double exit_phi_expectation_y(const Environment& env, const ExitDistribution& exd);

/// Law of v-bar(level) for 0 <= level < n.
CrossingDistribution crossing_distribution(int level, const LogZLattice& lat, const ReverseLattice& rev);

PathFunctionals path_functionals(const PolymerPath& path);

/// CSV "k,i,j".
void write_path_csv(std::ostream& os, const PolymerPath& path);
/// CSV "index,probability", indices starting at `first`.
void write_distribution_csv(std::ostream& os, std::span<const double> probs, int first);

}  // namespace lgp
