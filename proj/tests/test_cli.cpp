#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "polymer_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(POLYMER_EXE) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json load(const fs::path& p) {
    std::ifstream f(p);
    return nlohmann::json::parse(f);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("exit codes") {
    fs::create_directories(kWork);
    const auto out = (kWork / "self.json").string();
    CHECK(run("lattice-selftest -q --trials 10 -o " + out) == 0);
    CHECK(load(out)["pass"] == true);
    CHECK(run("") == 2);
    CHECK(run("no-such-command") == 2);
    CHECK(run("burke --reps 10 -q -o " + out) == 2);
    CHECK(run("fixed-point --theta 3 --mu 2 -q -o " + out) == 2);
    CHECK(run("chi --n-list 64,32,128,256 -q -o " + out) == 2);
    // A 4-sigma band squeezed to nothing must fail the run.
    CHECK(run("fixed-point --reps 100000 --sigma 1e-9 -q -o " + out) == 1);
    CHECK(load(out)["pass"] == false);
}

TEST_CASE("reports and CSV tables") {
    fs::create_directories(kWork);
    const auto a = kWork / "a.json", b = kWork / "b.json";
    const auto csv = kWork / "csv";
    REQUIRE(run("chi --n-list 8,16,32,64 --reps 100 -q --seed 3 -o " + a.string() + " --csv " + csv.string()) <= 1);
    REQUIRE(run("chi --n-list 8,16,32,64 --reps 100 -q --seed 3 --workers 1 -o " + b.string()) <= 1);
    auto ja = load(a), jb = load(b);
    CHECK(ja["schema"] == 1);
    ja.erase("run");
    jb.erase("run");
    CHECK(ja.dump() == jb.dump());
    const auto table = slurp(csv / "chi_variance.csv");
    CHECK(table.rfind("N,var_logZ,stderr\n", 0) == 0);

    // The seed can come from the environment.
    const auto c = kWork / "c.json";
    REQUIRE(std::system(("POLYMER_SEED=3 " + std::string(POLYMER_EXE) + " chi --n-list 8,16,32,64 --reps 100 -q -o " +
                         c.string() + " >/dev/null 2>&1")
                            .c_str()) != -1);
    auto jc = load(c);
    jc.erase("run");
    CHECK(jc.dump() == ja.dump());
}

TEST_CASE("TOML manifests with flag overrides") {
    fs::create_directories(kWork);
    const auto cfg = kWork / "run.toml";
    const auto out = kWork / "cfg.json";
    write(cfg, "seed = 9\n[chi]\nn-list = [8, 16, 32, 64]\nreps = [100]\n");
    REQUIRE(run("chi --config " + cfg.string() + " -q -o " + out.string()) <= 1);
    auto j = load(out);
    CHECK(j["parameters"]["N_list"] == nlohmann::json::array({8, 16, 32, 64}));

    REQUIRE(run("chi --config " + cfg.string() + " --n-list 8,16,24,32,64 -q -o " + out.string()) <= 1);
    j = load(out);
    CHECK(j["parameters"]["N_list"] == nlohmann::json::array({8, 16, 24, 32, 64}));

    write(cfg, "seed = 9\nbogus_key = 1\n");
    CHECK(run("lattice-selftest --config " + cfg.string() + " -q -o " + out.string()) == 2);
    CHECK(run("lattice-selftest --config " + (kWork / "missing.toml").string() + " -q -o " + out.string()) == 2);
}
