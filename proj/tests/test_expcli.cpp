#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sldp/config.hpp"
#include "sldp/runner.hpp"

using namespace sldp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing: values, defaults, diagnostics") {
    const Config cfg = Config::parse_string(
        "kind = tail\n"
        "# comment\n"
        "[model]\n"
        "id = burgers\n"
        "[grid]\n"
        "dt = 0.005\n"
        "n_dof = 48\n"
        "[epsilons]\n"
        "list = 0.5, 0.25, 0.125\n",
        "test.cfg");
    CHECK(cfg.get_string("", "kind", "?") == "tail");
    CHECK(cfg.get_string("model", "id", "?") == "burgers");
    CHECK(cfg.get_double("grid", "dt", 0.0) == 0.005);
    CHECK(cfg.get_size("grid", "n_dof", 0) == 48);
    CHECK(cfg.get_double("grid", "horizon", 1.0) == 1.0);  // default
    const auto list = cfg.get_list("epsilons", "list", {});
    REQUIRE(list.size() == 3);
    CHECK(list[1] == 0.25);
    CHECK_NOTHROW(cfg.require_all_consumed());
}

TEST_CASE("config rejects malformed input with line numbers") {
    CHECK_THROWS_WITH_AS(Config::parse_string("a\n", "f.cfg"), doctest::Contains("f.cfg:1"), ConfigError);
    CHECK_THROWS_WITH_AS(Config::parse_string("[model\nid = x\n", "f.cfg"), doctest::Contains("f.cfg:1"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(Config::parse_string("x = 1\nx = 2\n", "f.cfg"), doctest::Contains("f.cfg:2"), ConfigError);
    const Config bad_num = Config::parse_string("[grid]\ndt = fast\n", "f.cfg");
    CHECK_THROWS_WITH_AS((void)bad_num.get_double("grid", "dt", 0.0), doctest::Contains("f.cfg:2"), ConfigError);
    const Config neg = Config::parse_string("[ensemble]\nn_paths = -5\n", "f.cfg");
    CHECK_THROWS_WITH_AS((void)neg.get_size("ensemble", "n_paths", 1), doctest::Contains("unsigned"), ConfigError);
}

TEST_CASE("strict parsing: unknown keys are fatal with their locations") {
    const Config cfg = Config::parse_string("kind = tail\n[grid]\ndt = 0.01\ntypo_key = 3\n", "run.cfg");
    (void)cfg.get_string("", "kind", "?");
    (void)cfg.get_double("grid", "dt", 0.0);
    CHECK_THROWS_WITH_AS(cfg.require_all_consumed(), doctest::Contains("typo_key"), ConfigError);
    CHECK_THROWS_WITH_AS(cfg.require_all_consumed(), doctest::Contains("run.cfg:4"), ConfigError);
}

TEST_CASE("config hash is stable under key reordering and sensitive to values") {
    const Config a = Config::parse_string("kind = tail\n[grid]\ndt = 0.01\nhorizon = 1\n");
    const Config b = Config::parse_string("[grid]\nhorizon = 1\ndt = 0.01\nkind = tail\n");
    // same keys, same values, different order and section interleaving
    const Config b2 = Config::parse_string("kind = tail\n[grid]\nhorizon = 1\ndt = 0.01\n");
    CHECK(a.hash_hex() == b2.hash_hex());
    CHECK(a.canonical() == b2.canonical());
    (void)b;
    const Config c = Config::parse_string("kind = tail\n[grid]\ndt = 0.02\nhorizon = 1\n");
    CHECK(a.hash_hex() != c.hash_hex());
}

TEST_CASE("rate run: linear additive instrument hits the closed-form window") {
    TempDir dir("sldp_test_rate");
    const Config cfg = Config::parse_string(
        "kind = rate\n"
        "[model]\n"
        "id = scalar_additive\n"
        "b = 2\n"
        "[grid]\n"
        "horizon = 1\n"
        "[rate]\n"
        "target = 1.0\n"
        "match_tol = 1e-7\n"
        "[output]\n"
        "dir = " + (dir.path / "run").string() + "\n");
    const RunManifest manifest = run_experiment(cfg);
    CHECK(manifest.kind == "rate");
    const std::string rate_json = slurp(dir.path / "run" / "rate.json");
    const auto i_pos = rate_json.find("\"i_value\": ");
    REQUIRE(i_pos != std::string::npos);
    const double i_value = std::stod(rate_json.substr(i_pos + 11));
    CHECK(i_value >= 0.1225);
    CHECK(i_value <= 0.1275);
}

TEST_CASE("runs are byte-identical when re-executed from the same config") {
    TempDir dir("sldp_test_repro");
    const std::string base =
        "kind = tail\n"
        "[model]\n"
        "id = scalar_additive\n"
        "b = 1\n"
        "[grid]\n"
        "dt = 0.01\n"
        "horizon = 0.5\n"
        "epsilon = 0.2\n"
        "[statistic]\n"
        "kind = sup_displacement\n"
        "delta = 0.1\n"
        "[ensemble]\n"
        "n_paths = 500\n"
        "master_seed = 42\n";
    const Config cfg1 = Config::parse_string(base + "[output]\ndir = " + (dir.path / "a").string() + "\n");
    const Config cfg2 = Config::parse_string(base + "[output]\ndir = " + (dir.path / "b").string() + "\n");
    run_experiment(cfg1);
    run_experiment(cfg2);
    CHECK(slurp(dir.path / "a" / "tail.json") == slurp(dir.path / "b" / "tail.json"));
}

TEST_CASE("audit run writes records and reports render from disk") {
    TempDir dir("sldp_test_audit_run");
    const Config cfg = Config::parse_string(
        "kind = audit\n"
        "[model]\n"
        "id = heat\n"
        "[grid]\n"
        "n_dof = 16\n"
        "[noise]\n"
        "kind = multiplicative\n"
        "m = 3\n"
        "amplitude = 1.0\n"
        "[audit]\n"
        "n = 200\n"
        "seed = 4\n"
        "[output]\n"
        "dir = " + (dir.path / "run").string() + "\n");
    const RunManifest manifest = run_experiment(cfg);
    CHECK(fs::exists(dir.path / "run" / "audit.json"));
    CHECK(fs::exists(dir.path / "run" / "manifest.json"));
    CHECK_FALSE(fs::exists(dir.path / "run" / "run.lock"));  // released
    CHECK(manifest.outputs.size() == 1);

    const std::string table = report_run((dir.path / "run").string());
    CHECK(table.find("A2_local_monotonicity") != std::string::npos);
    CHECK(fs::exists(dir.path / "run" / "report.csv"));
}

TEST_CASE("a run refuses a locked output directory") {
    TempDir dir("sldp_test_lock");
    fs::create_directories(dir.path / "run");
    std::ofstream(dir.path / "run" / "run.lock") << "held\n";
    const Config cfg = Config::parse_string(
        "kind = simulate\n[model]\nid = heat\n[grid]\nn_dof = 8\ndt = 0.01\nhorizon = 0.05\n[noise]\nkind = zero\n"
        "[output]\ndir = " + (dir.path / "run").string() + "\n");
    CHECK_THROWS_WITH_AS(run_experiment(cfg), doctest::Contains("locked"), std::runtime_error);
}

TEST_CASE("report on a directory without a manifest fails cleanly") {
    TempDir dir("sldp_test_report_empty");
    fs::create_directories(dir.path);
    CHECK_THROWS_WITH_AS((void)report_run(dir.path.string()), doctest::Contains("manifest"), std::runtime_error);
    CHECK_FALSE(fs::exists(dir.path / "report.csv"));
}

TEST_CASE("equiv-curve run emits json + csv with per-level seeds in the manifest") {
    TempDir dir("sldp_test_equiv_run");
    const Config cfg = Config::parse_string(
        "kind = equiv-curve\n"
        "[model]\n"
        "id = heat\n"
        "[grid]\n"
        "n_dof = 12\n"
        "dt = 0.02\n"
        "horizon = 0.2\n"
        "[noise]\n"
        "kind = multiplicative\n"
        "m = 3\n"
        "amplitude = 1.0\n"
        "[epsilons]\n"
        "list = 0.5, 0.25\n"
        "[ensemble]\n"
        "n_paths = 60\n"
        "master_seed = 17\n"
        "[output]\n"
        "dir = " + (dir.path / "run").string() + "\n");
    const RunManifest manifest = run_experiment(cfg);
    CHECK(manifest.level_seeds.size() == 2);
    CHECK(fs::exists(dir.path / "run" / "equiv.csv"));
    const std::string csv = slurp(dir.path / "run" / "equiv.csv");
    CHECK(csv.find("epsilon,log_scaled,ci_lo,ci_hi,is_bound") == 0);
    const std::string table = report_run((dir.path / "run").string());
    CHECK(table.find("self-calibrated") != std::string::npos);

    // unknown keys anywhere in the config abort the run before any output
    TempDir dir2("sldp_test_equiv_badkey");
    const Config bad = Config::parse_string(
        "kind = equiv-curve\n[model]\nid = heat\n[grid]\nn_dof = 12\ndt = 0.02\nhorizon = 0.2\n"
        "[noise]\nkind = zero\n[statistic]\nbogus = 1\n[output]\ndir = " + (dir2.path / "r").string() + "\n");
    CHECK_THROWS_AS(run_experiment(bad), ConfigError);
}
