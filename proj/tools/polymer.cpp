// polymer: command-line driver for the log-gamma polymer experiments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lgp/experiments.hpp"

namespace {

using lgp::ExperimentReport;
using lgp::RunOptions;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;

struct Outputs {
    std::string json_path;
    std::string csv_dir;
    bool to_stdout = false;
};

std::vector<int> parse_dims(const std::string& s) {
    const auto x = s.find_first_of("x,");
    if (x == std::string::npos) throw std::invalid_argument("dims must look like 30x30");
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
}

void print_summary(const ExperimentReport& r) {
    std::cerr << r.name << ": " << (r.passed() ? "PASS" : "FAIL") << " (" << r.wall_seconds << " s)\n";
    for (const auto& c : r.checks) {
        const char* tag = c.pass ? "ok  " : (c.gating ? "FAIL" : "warn");
        std::cerr << "  [" << tag << "] " << c.name << " = " << c.estimate << "  in [" << c.lower << ", " << c.upper
                  << "]\n";
    }
}

void write_outputs(const std::vector<ExperimentReport>& reports, const Outputs& out) {
    nlohmann::ordered_json doc;
    if (reports.size() == 1) {
        doc = reports.front().to_json();
    } else {
        doc["schema"] = 1;
        doc["experiment"] = "all";
        bool pass = true;
        for (const auto& r : reports) pass = pass && r.passed();
        doc["pass"] = pass;
        doc["reports"] = nlohmann::ordered_json::array();
        for (const auto& r : reports) doc["reports"].push_back(r.to_json());
    }
    const std::string text = doc.dump(2) + "\n";
    if (out.to_stdout) std::cout << text;
    if (!out.json_path.empty()) {
        std::ofstream f(out.json_path);
        if (!f) throw std::runtime_error("cannot write " + out.json_path);
        f << text;
    }
    if (!out.csv_dir.empty()) {
        std::filesystem::create_directories(out.csv_dir);
        for (const auto& r : reports) {
            for (const auto& t : r.tables) {
                const auto path = std::filesystem::path(out.csv_dir) / (r.name + "_" + t.name + ".csv");
                std::ofstream f(path);
                if (!f) throw std::runtime_error("cannot write " + path.string());
                f << lgp::write_csv(t);
            }
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation laboratory for the log-gamma directed polymer"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML run manifest; command-line flags take precedence");
    app.allow_config_extras(false);

    RunOptions opts;
    Outputs out;
    bool quiet = false;
    app.add_option("--seed", opts.seed, "Master seed")->envname("POLYMER_SEED");
    app.add_option("--workers", opts.workers, "Worker threads (0: all logical cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--sigma", opts.thresholds.sigma, "Sigma multiplier for moment checks")
        ->check(CLI::PositiveNumber);
    app.add_option("--p-min", opts.thresholds.p_min, "Minimum KS p-value")->check(CLI::Range(0.0, 1.0));
    app.add_option("-o,--output", out.json_path, "Write the JSON report to this file");
    app.add_option("--csv", out.csv_dir, "Directory for CSV tables");
    app.add_flag("--stdout", out.to_stdout, "Print the JSON report on standard output");
    app.add_flag("--keep-replicas", opts.keep_replicas, "Add per-replica CSV tables");
    app.add_flag("-q,--quiet", quiet, "No progress or summary on standard error");

    std::vector<std::function<ExperimentReport()>> jobs;
    auto sub = [&](const char* name, const char* desc) { return app.add_subcommand(name, desc); };

    lgp::BurkeConfig burke;
    std::string burke_dims = "30x30";
    auto* c_burke = sub("burke", "Burke property along a down-right path");
    c_burke->add_option("--theta", burke.theta);
    c_burke->add_option("--mu", burke.mu);
    c_burke->add_option("--dims", burke_dims, "Rectangle as MxN");
    c_burke->add_option("--reps", burke.reps);

    lgp::FixedPointConfig fixed;
    auto* c_fixed = sub("fixed-point", "Invariance of the one-step (U,V,Y) map");
    c_fixed->add_option("--theta", fixed.theta);
    c_fixed->add_option("--mu", fixed.mu);
    c_fixed->add_option("--reps", fixed.reps);

    lgp::VarIdentityConfig var;
    auto* c_var = sub("var-identity", "Variance of log Z against the exit-point identities");
    c_var->add_option("--theta", var.theta);
    c_var->add_option("--mu", var.mu);
    c_var->add_option("--n", var.N, "Scaling parameter N");
    c_var->add_option("--reps", var.reps);

    lgp::ChiConfig chi;
    auto* c_chi = sub("chi", "Free-energy fluctuation exponent");
    c_chi->add_option("--theta", chi.theta);
    c_chi->add_option("--mu", chi.mu);
    c_chi->add_option("--n-list", chi.n_list)->delimiter(',');
    c_chi->add_option("--reps", chi.reps, "One value, or one per N")->delimiter(',');

    lgp::ZetaConfig zeta;
    auto* c_zeta = sub("zeta", "Transversal fluctuation exponent from exact crossing laws");
    c_zeta->add_option("--theta", zeta.theta);
    c_zeta->add_option("--mu", zeta.mu);
    c_zeta->add_option("--n-list", zeta.n_list)->delimiter(',');
    c_zeta->add_option("--reps", zeta.reps, "One value, or one per N")->delimiter(',');
    c_zeta->add_option("--tau", zeta.tau);
    c_zeta->add_option("--b-list", zeta.b_list)->delimiter(',');

    lgp::CltConfig clt;
    auto* c_clt = sub("clt-offchar", "Gaussian fluctuations off the characteristic direction");
    c_clt->add_option("--theta", clt.theta);
    c_clt->add_option("--mu", clt.mu);
    c_clt->add_option("--n", clt.N, "Scaling parameter N");
    c_clt->add_option("--alpha", clt.alpha);
    c_clt->add_option("--c1", clt.c1);
    c_clt->add_option("--reps", clt.reps);

    lgp::LlnBulkConfig lln;
    auto* c_lln = sub("lln-bulk", "Law of large numbers without boundaries");
    c_lln->add_option("--s", lln.s);
    c_lln->add_option("--t", lln.t);
    c_lln->add_option("--mu", lln.mu);
    c_lln->add_option("--n", lln.N, "Scaling parameter N");
    c_lln->add_option("--reps", lln.reps);
    c_lln->add_option("--b-list", lln.b_list)->delimiter(',');

    lgp::FreeEndpointConfig free_ep;
    auto* c_free = sub("free-endpoint", "Point-to-line polymer without boundaries");
    c_free->add_option("--mu", free_ep.mu);
    c_free->add_option("--n-list", free_ep.n_list)->delimiter(',');
    c_free->add_option("--reps", free_ep.reps, "One value, or one per N")->delimiter(',');

    lgp::BoundaryFreeConfig bfree;
    bool no_symmetric = false;
    auto* c_bfree = sub("boundary-free-endpoint", "Point-to-line polymer with boundaries");
    c_bfree->add_option("--theta", bfree.theta);
    c_bfree->add_option("--mu", bfree.mu);
    c_bfree->add_option("--n", bfree.N, "Line x+y=N");
    c_bfree->add_option("--reps", bfree.reps);
    c_bfree->add_option("--reference-draws", bfree.reference_draws);
    c_bfree->add_flag("--no-symmetric", no_symmetric, "Skip the theta = mu/2 case");

    lgp::DualityConfig dual;
    std::string dual_dims = "20x20";
    auto* c_dual = sub("duality", "Reversal identities, dual measure and last-step beta law");
    c_dual->add_option("--theta", dual.theta);
    c_dual->add_option("--mu", dual.mu);
    c_dual->add_option("--dims", dual_dims, "Rectangle as MxN");
    c_dual->add_option("--reps", dual.reps);
    c_dual->add_option("--beta-reps", dual.beta_reps);
    c_dual->add_option("--identity-envs", dual.identity_envs);
    c_dual->add_option("--k-list", dual.k_list)->delimiter(',');

    lgp::SelftestConfig self;
    auto* c_self = sub("lattice-selftest", "Deterministic identity suite");
    c_self->add_option("--trials", self.brute_force_trials);

    auto* c_all = sub("all", "Every experiment with default settings");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return e.get_exit_code() == 0 ? code : kExitConfig;
    }
    opts.progress = !quiet;

    auto run_burke = [&] {
        const auto d = parse_dims(burke_dims);
        burke.m = d[0];
        burke.n = d[1];
        return lgp::exp_burke(burke, opts);
    };
    auto run_dual = [&] {
        const auto d = parse_dims(dual_dims);
        dual.m = d[0];
        dual.n = d[1];
        return lgp::exp_duality(dual, opts);
    };
    bfree.include_symmetric = !no_symmetric;

    const bool all = c_all->parsed();
    if (all || c_self->parsed()) jobs.emplace_back([&] { return lgp::lattice_selftest(self, opts); });
    if (all || c_burke->parsed()) jobs.emplace_back(run_burke);
    if (all || c_fixed->parsed()) jobs.emplace_back([&] { return lgp::exp_fixed_point(fixed, opts); });
    if (all || c_var->parsed()) jobs.emplace_back([&] { return lgp::exp_var_identity(var, opts); });
    if (all || c_dual->parsed()) jobs.emplace_back(run_dual);
    if (all || c_chi->parsed()) jobs.emplace_back([&] { return lgp::exp_chi(chi, opts); });
    if (all || c_zeta->parsed()) jobs.emplace_back([&] { return lgp::exp_zeta(zeta, opts); });
    if (all || c_clt->parsed()) jobs.emplace_back([&] { return lgp::exp_clt_offchar(clt, opts); });
    if (all || c_lln->parsed()) jobs.emplace_back([&] { return lgp::exp_lln_bulk(lln, opts); });
    if (all || c_free->parsed()) jobs.emplace_back([&] { return lgp::exp_free_endpoint(free_ep, opts); });
    if (all || c_bfree->parsed()) jobs.emplace_back([&] { return lgp::exp_boundary_free_endpoint(bfree, opts); });

    std::vector<ExperimentReport> reports;
    try {
        for (auto& job : jobs) {
            reports.push_back(job());
            if (!quiet) print_summary(reports.back());
        }
        if (out.json_path.empty() && !out.to_stdout) {
            out.json_path = (all ? std::string("all") : reports.front().name) + ".json";
        }
        write_outputs(reports, out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailed;
    }

    for (const auto& r : reports) {
        if (!r.passed()) return kExitFailed;
    }
    return kExitOk;
}
