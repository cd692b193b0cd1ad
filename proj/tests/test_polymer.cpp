#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "lgp/polymer.hpp"
#include "lgp/stats.hpp"
#include "oracles.hpp"

using namespace lgp;

namespace {

Environment random_env(int m, int n, std::uint64_t id, double theta = 0.8, double mu = 2.0) {
    return build_env(m, n, ModelParams(theta, mu), RngStream(77, id));
}

std::vector<std::pair<int, int>> key(const oracle::Path& p) {
    std::vector<std::pair<int, int>> k;
    for (auto q : p) k.emplace_back(q.i, q.j);
    return k;
}

// Exact quenched probability of every path.
std::map<std::vector<std::pair<int, int>>, double> path_law(const Environment& env) {
    std::map<std::vector<std::pair<int, int>>, double> law;
    double z = 0.0;
    for (const auto& p : oracle::all_paths({0, 0}, {env.m, env.n})) z += (law[key(p)] = oracle::path_weight(env, p));
    for (auto& [k, w] : law) w /= z;
    return law;
}

double chi_square_p(const std::map<std::vector<std::pair<int, int>>, double>& law,
                    const std::map<std::vector<std::pair<int, int>>, long>& counts, long draws) {
    double stat = 0.0;
    for (const auto& [k, p] : law) {
        const auto it = counts.find(k);
        const double obs = it == counts.end() ? 0.0 : static_cast<double>(it->second);
        const double expected = p * static_cast<double>(draws);
        stat += (obs - expected) * (obs - expected) / expected;
    }
    return boost::math::gamma_q(0.5 * static_cast<double>(law.size() - 1), 0.5 * stat);
}

}  // namespace

TEST_CASE("path accessors") {
    PolymerPath p{{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {3, 1}, {3, 2}, {3, 3}}};
    CHECK(p.exit_x() == 2);
    CHECK(p.exit_y() == 0);
    CHECK(p.last_east_run() == 0);
    CHECK(p.last_north_run() == 2);
    PolymerPath q{{{0, 0}, {0, 1}, {1, 1}, {2, 1}}};
    CHECK(q.exit_x() == 0);
    CHECK(q.exit_y() == 1);
    CHECK(q.last_east_run() == 2);
}

TEST_CASE("path sampler reproduces the quenched law") {
    const auto ones = constant_env(2, 2, 0.0);
    auto lat = forward_logZ(ones);
    RngStream rng(3, 3);
    const long draws = 60000;
    std::map<std::vector<std::pair<int, int>>, long> counts;
    for (long d = 0; d < draws; ++d) ++counts[key(sample_path(lat, rng).points)];
    REQUIRE(counts.size() == 6);
    for (const auto& [k, c] : counts) {
        const double sd = std::sqrt(draws * (1.0 / 6) * (5.0 / 6));
        CHECK(std::abs(static_cast<double>(c) - draws / 6.0) < 4.0 * sd);
    }

    for (int trial = 0; trial < 3; ++trial) {
        const auto env = random_env(2 + trial, 3, static_cast<std::uint64_t>(trial));
        lat = forward_logZ(env);
        std::map<std::vector<std::pair<int, int>>, long> c;
        for (long d = 0; d < draws; ++d) {
            const auto path = sample_path(lat, rng);
            REQUIRE(path.points.front() == Point{0, 0});
            REQUIRE(path.points.back() == Point{env.m, env.n});
            ++c[key(path.points)];
        }
        CHECK(chi_square_p(path_law(env), c, draws) > 1e-3);
    }
}

TEST_CASE("dual measure is the reversed quenched measure of the reversed environment") {
    for (int trial = 0; trial < 5; ++trial) {
        const auto env = random_env(3, 2 + trial % 2, 40 + trial);
        const auto lat = forward_logZ(env);
        const auto dual = dual_weights(lat, env);
        const auto law_star = path_law(reversed_environment(lat, env));
        for (const auto& p : oracle::all_paths({0, 0}, {env.m, env.n})) {
            double prob = 1.0;
            for (std::size_t k = 0; k + 1 < p.size(); ++k) {
                const auto pi = dual_kernel(dual, lat, p[k]);
                CHECK(pi[0] + pi[1] == doctest::Approx(1.0).epsilon(1e-12));
                prob *= p[k + 1].i > p[k].i ? pi[0] : pi[1];
            }
            oracle::Path back;
            for (auto it = p.rbegin(); it != p.rend(); ++it) back.push_back({env.m - it->i, env.n - it->j});
            CHECK(prob == doctest::Approx(law_star.at(key(back))).epsilon(1e-10));
        }
        for (int k = 0; k <= env.m + 1; ++k) {
            double expect = 0.0;
            for (const auto& p : oracle::all_paths({0, 0}, {env.m, env.n})) {
                double prob = 1.0;
                for (std::size_t s = 0; s + 1 < p.size(); ++s) {
                    const auto pi = dual_kernel(dual, lat, p[s]);
                    prob *= p[s + 1].i > p[s].i ? pi[0] : pi[1];
                }
                PolymerPath pp{p};
                if (pp.exit_x() >= k) expect += prob;
            }
            CHECK(dual_exit_at_least(dual, lat, k) == doctest::Approx(expect).epsilon(1e-10));
        }
    }
    // All-ones 2x2: from (1,0) the east step has probability Z(1,0)/Z(1,1) * X = 2/3.
    const auto ones = constant_env(2, 2, 0.0);
    const auto lat = forward_logZ(ones);
    const auto dual = dual_weights(lat, ones);
    CHECK(dual_kernel(dual, lat, {0, 0})[0] == doctest::Approx(0.5));
    CHECK(dual_kernel(dual, lat, {1, 0})[0] == doctest::Approx(2.0 / 3.0));
    CHECK(dual_kernel(dual, lat, {2, 0})[1] == 1.0);
    CHECK(dual_kernel(dual, lat, {0, 2})[0] == 1.0);
    CHECK_THROWS_AS(dual_kernel(dual, lat, {2, 2}), std::invalid_argument);
}

TEST_CASE("exit law and last-step probabilities") {
    const auto ones = constant_env(3, 3, 0.0);
    const auto lat1 = forward_logZ(ones);
    const auto ex1 = exit_distribution(lat1, reverse_logW(ones, {3, 3}));
    for (int k = 1; k <= 3; ++k) {
        // Paths leaving the axis at (k,0) continue north to (k,1).
        const double expect = static_cast<double>(oracle::binomial(3 - k + 2, 2)) / 20.0;
        CHECK(ex1.px[k - 1] == doctest::Approx(expect).epsilon(1e-13));
        CHECK(ex1.py[k - 1] == doctest::Approx(expect).epsilon(1e-13));
    }

    for (int trial = 0; trial < 10; ++trial) {
        const auto env = random_env(4, 3, 60 + trial);
        const auto lat = forward_logZ(env);
        const auto exd = exit_distribution(lat, reverse_logW(env, {4, 3}));
        const auto law = path_law(env);
        double sum = 0.0;
        for (double p : exd.px) sum += p;
        for (double p : exd.py) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        std::vector<double> px(4, 0.0), py(3, 0.0), last_east(5, 0.0);
        for (const auto& [k, p] : law) {
            PolymerPath path;
            for (auto [i, j] : k) path.points.push_back({i, j});
            if (path.exit_x() > 0) px[path.exit_x() - 1] += p;
            if (path.exit_y() > 0) py[path.exit_y() - 1] += p;
            for (int r = 0; r <= path.last_east_run(); ++r) last_east[r] += p;
        }
        for (int k = 0; k < 4; ++k) CHECK(exd.px[k] == doctest::Approx(px[k]).epsilon(1e-10));
        for (int k = 0; k < 3; ++k) CHECK(exd.py[k] == doctest::Approx(py[k]).epsilon(1e-10));
        for (int r = 1; r <= 4; ++r) CHECK(last_steps_east_probability(lat, env, r) == doctest::Approx(last_east[r]).epsilon(1e-10));
        CHECK(last_step_probability(lat) == doctest::Approx(last_east[1]).epsilon(1e-10));
        const double q = last_step_probability(lat);
        CHECK(q > 0.0);
        CHECK(q < 1.0);

        const auto cross0 = crossing_distribution(0, lat, reverse_logW(env, {4, 3}));
        // The path leaves row 0 at its rightmost point, which is the exit point.
        double sum_y = 0.0;
        for (double p : exd.py) sum_y += p;
        CHECK(cross0.pv[0] == doctest::Approx(sum_y).epsilon(1e-10));
        for (int k = 1; k <= 4; ++k) CHECK(cross0.pv[k] == doctest::Approx(exd.px[k - 1]).epsilon(1e-10));
    }
}

TEST_CASE("crossing law against brute force") {
    for (int trial = 0; trial < 5; ++trial) {
        const auto env = trial == 0 ? constant_env(4, 4, 0.0) : random_env(4, 4, 80 + trial);
        const auto lat = forward_logZ(env);
        const auto rev = reverse_logW(env, {4, 4});
        const auto law = path_law(env);
        for (int level = 0; level < 4; ++level) {
            const auto cd = crossing_distribution(level, lat, rev);
            std::vector<double> expect(5, 0.0);
            for (const auto& [k, p] : law) {
                PolymerPath path;
                for (auto [i, j] : k) path.points.push_back({i, j});
                expect[path_functionals(path).v_max[level]] += p;
            }
            double mean = 0.0, second = 0.0;
            for (int i = 0; i <= 4; ++i) {
                CHECK(cd.pv[i] == doctest::Approx(expect[i]).epsilon(1e-10));
                mean += i * expect[i];
                second += i * i * expect[i];
            }
            CHECK(cd.mean() == doctest::Approx(mean).epsilon(1e-10));
            CHECK(cd.variance() == doctest::Approx(second - mean * mean).epsilon(1e-9));
        }
    }
    const auto env = constant_env(4, 4, 0.0);
    const auto cd = crossing_distribution(2, forward_logZ(env), reverse_logW(env, {4, 4}));
    for (int i = 0; i <= 4; ++i) {
        const double expect = static_cast<double>(oracle::binomial(i + 2, 2) * oracle::binomial(5 - i, 1)) / 70.0;
        CHECK(cd.pv[i] == doctest::Approx(expect));
    }
    CHECK_THROWS_AS(crossing_distribution(4, forward_logZ(env), reverse_logW(env, {4, 4})), std::invalid_argument);
}

TEST_CASE("exit point expectations of phi") {
    auto env = random_env(1, 0, 5);
    const auto lat = forward_logZ(env);
    const auto exd = exit_distribution(lat, reverse_logW(env, {1, 0}));
    CHECK(exit_phi_expectation_x(env, exd) == doctest::Approx(phi(env.theta, std::exp(-env.log_u0[0]))));
    CHECK(exit_phi_expectation_y(env, exd) == 0.0);

    // Huge vertical boundary weights push all mass onto the y-axis.
    auto tilted = random_env(6, 6, 6);
    for (auto& v : tilted.log_v0) v += 40.0;
    const auto tl = forward_logZ(tilted);
    const auto te = exit_distribution(tl, reverse_logW(tilted, {6, 6}));
    CHECK(exit_phi_expectation_x(tilted, te) < 1e-12);
    CHECK(exit_phi_expectation_y(tilted, te) > 0.0);
}

TEST_CASE("path functionals") {
    PolymerPath stair{{{0, 0}, {1, 0}, {1, 1}, {2, 1}, {2, 2}}};
    const auto f = path_functionals(stair);
    CHECK(f.v_min == std::vector<int>{0, 1, 2});
    CHECK(f.v_max == std::vector<int>{1, 2, 2});
    CHECK(f.w_min == std::vector<int>{0, 0, 1});
    CHECK(f.w_max == std::vector<int>{0, 1, 2});
    CHECK(f.exit_x == 1);
    CHECK(f.exit_y == 0);

    PolymerPath east_first{{{0, 0}, {1, 0}, {2, 0}, {2, 1}}};
    const auto g = path_functionals(east_first);
    CHECK(g.v_max[0] == 2);
    CHECK(g.exit_x == 2);

    const auto env = random_env(10, 10, 9);
    const auto lat = forward_logZ(env);
    RngStream rng(1, 1);
    for (int t = 0; t < 200; ++t) {
        const auto path = sample_path(lat, rng);
        const auto h = path_functionals(path);
        CHECK(h.exit_x == path.exit_x());
        CHECK(h.exit_y == path.exit_y());
        CHECK((h.exit_x == 0) != (h.exit_y == 0));
        for (int j = 0; j < 10; ++j) {
            CHECK(h.v_min[j] <= h.v_max[j]);
            CHECK(h.v_max[j] == h.v_min[j + 1]);
        }
    }
    PolymerPath broken{{{0, 0}, {1, 1}}};
    CHECK_THROWS_AS(path_functionals(broken), std::invalid_argument);
}

TEST_CASE("sampled exit law matches the exact law") {
    const auto env = random_env(50, 50, 10, 1.0, 2.0);
    const auto lat = forward_logZ(env);
    const auto exd = exit_distribution(lat, reverse_logW(env, {50, 50}));
    RngStream rng(2, 2);
    const long draws = 100000;
    std::vector<double> fx(50, 0.0), fy(50, 0.0);
    for (long d = 0; d < draws; ++d) {
        const auto path = sample_path(lat, rng);
        if (path.exit_x() > 0) fx[path.exit_x() - 1] += 1.0 / draws;
        if (path.exit_y() > 0) fy[path.exit_y() - 1] += 1.0 / draws;
    }
    double tv = 0.0;
    for (int k = 0; k < 50; ++k) tv += 0.5 * (std::abs(fx[k] - exd.px[k]) + std::abs(fy[k] - exd.py[k]));
    CHECK(tv < 0.01);
}

TEST_CASE("dual sampler agrees with the dual exit probabilities") {
    const auto env = random_env(12, 12, 11);
    const auto lat = forward_logZ(env);
    const auto dual = dual_weights(lat, env);
    RngStream rng(4, 4);
    const long draws = 40000;
    for (int k : {1, 2, 5}) {
        long hits = 0;
        for (long d = 0; d < draws; ++d) hits += sample_dual_path(dual, lat, rng).exit_x() >= k;
        const double p = dual_exit_at_least(dual, lat, k);
        CAPTURE(k);
        CHECK(std::abs(static_cast<double>(hits) / draws - p) < 4.0 * std::sqrt(p * (1 - p) / draws) + 1e-9);
    }
}

TEST_CASE("csv writers") {
    std::ostringstream a;
    write_path_csv(a, PolymerPath{{{0, 0}, {1, 0}}});
    CHECK(a.str() == "k,i,j\n0,0,0\n1,1,0\n");
    std::ostringstream b;
    const std::vector<double> probs{0.25, 0.75};
    write_distribution_csv(b, probs, 3);
    CHECK(b.str() == "index,probability\n3,0.25\n4,0.75\n");
}
