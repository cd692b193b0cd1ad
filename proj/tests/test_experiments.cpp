#include <doctest.h>

#include <set>
#include <stdexcept>

#include "lgp/experiments.hpp"

using namespace lgp;

namespace {

RunOptions with_workers(int w, std::uint64_t seed = 5) {
    RunOptions o;
    o.seed = seed;
    o.workers = w;
    return o;
}

}  // namespace

TEST_CASE("stream ids and reps expansion") {
    std::set<std::uint64_t> ids;
    for (std::uint8_t tag = 0; tag < 4; ++tag) {
        for (std::uint8_t idx = 0; idx < 4; ++idx) {
            for (std::uint64_t r = 0; r < 100; ++r) ids.insert(replica_stream(tag, idx, r));
        }
    }
    CHECK(ids.size() == 1600);
    CHECK(reps_per_size({7}, 3) == std::vector<long>{7, 7, 7});
    CHECK(reps_per_size({2, 3, 4}, 3) == std::vector<long>{2, 3, 4});
    CHECK_THROWS_AS(reps_per_size({1, 2}, 3), std::invalid_argument);
}

TEST_CASE("config validation") {
    const auto o = with_workers(1);
    CHECK_THROWS_AS(exp_burke(BurkeConfig{.m = 4}, o), std::invalid_argument);
    CHECK_THROWS_AS(exp_burke(BurkeConfig{.reps = 100}, o), std::invalid_argument);
    CHECK_THROWS_AS(exp_fixed_point(FixedPointConfig{.reps = 10}, o), std::invalid_argument);
    CHECK_THROWS_AS(exp_chi(ChiConfig{.n_list = {64, 32, 128, 256}}, o), std::invalid_argument);
    CHECK_THROWS_AS(exp_zeta(ZetaConfig{.tau = 1.5}, o), std::invalid_argument);
    CHECK_THROWS_AS(exp_clt_offchar(CltConfig{.alpha = 0.5}, o), std::invalid_argument);
    CHECK_THROWS_AS(exp_duality(DualityConfig{.reps = 10}, o), std::invalid_argument);
    CHECK_THROWS(exp_fixed_point(FixedPointConfig{.theta = 3.0, .mu = 2.0}, o));
}

TEST_CASE("reports are deterministic and independent of the worker count") {
    const FixedPointConfig fp{.reps = 100000};
    const auto a = exp_fixed_point(fp, with_workers(1)).to_json(false).dump();
    CHECK(a == exp_fixed_point(fp, with_workers(1)).to_json(false).dump());
    CHECK(a == exp_fixed_point(fp, with_workers(3)).to_json(false).dump());
    CHECK(a != exp_fixed_point(fp, with_workers(1, 6)).to_json(false).dump());

    const DualityConfig dc{.m = 8, .n = 8, .reps = 2000, .identity_envs = 5, .beta_reps = 200};
    const auto d = exp_duality(dc, with_workers(1)).to_json(false).dump();
    CHECK(d == exp_duality(dc, with_workers(4)).to_json(false).dump());

    const ChiConfig cc{.n_list = {8, 16, 32, 64}, .reps = {200}};
    const auto c1 = exp_chi(cc, with_workers(1));
    CHECK(c1.to_json(false).dump() == exp_chi(cc, with_workers(2)).to_json(false).dump());
}

TEST_CASE("report structure") {
    const auto r = lattice_selftest(SelftestConfig{.brute_force_trials = 5, .mean_reps = 500}, with_workers(1));
    const auto j = r.to_json();
    CHECK(j["schema"] == 1);
    CHECK(j["experiment"] == "lattice-selftest");
    CHECK(j.contains("run"));
    CHECK_FALSE(r.to_json(false).contains("run"));
    CHECK(j["pass"] == r.passed());
    for (const auto& c : j["checks"]) {
        CHECK(c.contains("criterion"));
        CHECK(c["criterion"].get<int>() >= 1);
    }

    ExperimentReport manual;
    CHECK(manual.check("inside", 3, 1.0, 1.0, 0.5, 1.5));
    CHECK_FALSE(manual.check("advisory", 3, 9.0, 1.0, 0.5, 1.5, false));
    CHECK(manual.passed());
    CHECK_FALSE(manual.check("outside", 3, 9.0, 1.0, 0.5, 1.5));
    CHECK_FALSE(manual.passed());

    const CsvTable t{"x", {"N", "var_logZ", "stderr"}, {{64, 1.5, 0.25}}};
    CHECK(write_csv(t) == "N,var_logZ,stderr\n64,1.5,0.25\n");
}
