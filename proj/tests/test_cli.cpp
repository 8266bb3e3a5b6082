#include "catch_amalgamated.hpp"

#include "hybridspec/cli.hpp"
#include "hybridspec/errors.hpp"
#include "hybridspec/io.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kExamples = HYBRIDSPEC_EXAMPLES_DIR;

struct Outcome {
    int code = -1;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("hybridspec_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Outcome run_cli(const std::string& args, const fs::path& dir) {
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + HYBRIDSPEC_CLI_PATH + "\" " + args + " > \"" +
                            (dir / "stdout.txt").string() + "\" 2> \"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    o.err = ss.str();
    return o;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = hybridspec::read_text_file(e.path());
    }
    return files;
}

json error_of(const Outcome& o) {
    const auto line = o.err.substr(0, o.err.find('\n'));
    return json::parse(line);
}

// Reduced-effort copy of the example fit with absolute CSV paths.
fs::path small_fit_config(const fs::path& dir) {
    json c = json::parse(hybridspec::read_text_file(kExamples / "fit" / "fit.json"));
    for (auto& cut : c["cuts"]) cut["csv"] = (kExamples / "fit" / cut["csv"].get<std::string>()).string();
    c["ga"] = {{"population", 24}, {"generations", 10}, {"seed", 3}};
    c["polish_iterations"] = 5;
    c["mode_scan_points"] = 5;
    c["mode_scan_passes"] = 1;
    c["reconstruction"]["currents"] = {{"start", -40}, {"stop", 40}, {"points", 9}};
    c["reconstruction"]["grid"] = {{"start", 2.5e9}, {"stop", 2.6e9}, {"points", 101}};
    const fs::path p = dir / "fit_small.json";
    write(p, c.dump(2));
    return p;
}

}  // namespace

TEST_CASE("example commands succeed and write their artifacts") {
    const fs::path dir = scratch("examples");
    const std::map<std::string, std::vector<std::string>> expected{
        {"simulate", {"trace.csv", "summary.json"}},
        {"sweep", {"sweep.csv", "sweep.pgm", "summary.json"}},
        {"tune", {"tuning.csv", "tuning.json"}},
        {"circuit", {"circuit.csv", "summary.json"}}};
    for (const auto& [cmd, files] : expected) {
        const fs::path out = dir / cmd;
        const Outcome o = run_cli(cmd + " --config \"" + (kExamples / (cmd + ".json")).string() + "\" --out \"" +
                                      out.string() + "\"", dir);
        INFO(cmd << ": " << o.err);
        CHECK(o.code == 0);
        for (const auto& f : files) CHECK(fs::exists(out / f));
    }
    const auto trace = hybridspec::read_text_file(dir / "simulate" / "trace.csv");
    CHECK(trace.rfind("# hybridspec ", 0) == 0);
    CHECK(trace.find("config_sha256=" + hybridspec::sha256_hex(hybridspec::read_text_file(kExamples / "simulate.json"))) !=
          std::string::npos);
    const auto pgm = hybridspec::read_text_file(dir / "sweep" / "sweep.pgm");
    CHECK(pgm.rfind("P2\n# hybridspec ", 0) == 0);
}

TEST_CASE("every command is byte-reproducible") {
    const fs::path dir = scratch("determinism");
    std::map<std::string, fs::path> configs{{"simulate", kExamples / "simulate.json"},
                                            {"sweep", kExamples / "sweep.json"},
                                            {"tune", kExamples / "tune.json"},
                                            {"circuit", kExamples / "circuit.json"},
                                            {"fit", small_fit_config(dir)}};
    for (const auto& [cmd, cfg] : configs) {
        std::map<std::string, std::string> runs[2];
        for (int k = 0; k < 2; ++k) {
            const fs::path out = dir / (cmd + std::to_string(k));
            const Outcome o = run_cli(cmd + " --config \"" + cfg.string() + "\" --out \"" + out.string() + "\" --seed 9", dir);
            INFO(cmd << ": " << o.err);
            REQUIRE(o.code == 0);
            runs[k] = read_tree(out);
        }
        INFO(cmd);
        CHECK_FALSE(runs[0].empty());
        CHECK(runs[0] == runs[1]);
    }
    CHECK(fs::exists(dir / "fit0" / "reconstruction.pgm"));
    CHECK(fs::exists(dir / "fit0" / "fit_table.txt"));
}

TEST_CASE("seed override is recorded") {
    const fs::path dir = scratch("seed");
    const std::string cfg = (kExamples / "simulate.json").string();
    REQUIRE(run_cli("simulate --config \"" + cfg + "\" --out \"" + (dir / "a").string() + "\" --seed 77", dir).code == 0);
    REQUIRE(run_cli("simulate --config \"" + cfg + "\" --out \"" + (dir / "b").string() + "\"", dir).code == 0);
    const json a = json::parse(hybridspec::read_text_file(dir / "a" / "summary.json"));
    const json b = json::parse(hybridspec::read_text_file(dir / "b" / "summary.json"));
    CHECK(a["provenance"]["seed"] == 77);
    CHECK(b["provenance"]["seed"] == 1);
}

TEST_CASE("configuration errors exit with 2 and a JSON message") {
    const fs::path dir = scratch("config_errors");
    const json base = json::parse(hybridspec::read_text_file(kExamples / "simulate.json"));
    std::vector<std::pair<std::string, std::string>> cases;
    cases.emplace_back("malformed", "{ not json");
    json unknown = base;
    unknown["bogus"] = 1;
    cases.emplace_back("unknown_key", unknown.dump());
    json bad_unit = base;
    bad_unit["system"]["cavity"]["frequency"] = "2.9 GHzz";
    cases.emplace_back("bad_unit", bad_unit.dump());
    json wrong_unit = base;
    wrong_unit["system"]["cavity"]["frequency"] = "2.9 mA";
    cases.emplace_back("wrong_dimension", wrong_unit.dump());
    json negative = base;
    negative["system"]["mechanical"][0]["gamma"] = -5;
    cases.emplace_back("negative_rate", negative.dump());
    json missing = base;
    missing.erase("grid");
    cases.emplace_back("missing_grid", missing.dump());
    json descending = base;
    descending["grid"] = json::array({2.6e9, 2.5e9});
    cases.emplace_back("descending_grid", descending.dump());

    for (const auto& [name, text] : cases) {
        const fs::path cfg = dir / (name + ".json");
        write(cfg, text);
        const Outcome o = run_cli("simulate --config \"" + cfg.string() + "\" --out \"" + (dir / name).string() + "\"", dir);
        INFO(name << ": " << o.err);
        CHECK(o.code == hybridspec::cli::kExitConfig);
        const json e = error_of(o);
        CHECK(e["exit_code"] == 2);
        CHECK(e["error"]["kind"] == "config");
        CHECK_FALSE(e["error"]["message"].get<std::string>().empty());
    }

    const Outcome usage = run_cli("simulate --out \"" + dir.string() + "\"", dir);
    CHECK(usage.code == 2);
    const Outcome no_command = run_cli("", dir);
    CHECK(no_command.code == 2);

    json fit = json::parse(hybridspec::read_text_file(kExamples / "fit" / "fit.json"));
    fit["cuts"][0]["csv"] = "does/not/exist.csv";
    write(dir / "fit_missing.json", fit.dump());
    const Outcome missing_csv = run_cli("fit --config \"" + (dir / "fit_missing.json").string() + "\" --out \"" +
                                            (dir / "fit").string() + "\"", dir);
    CHECK(missing_csv.code == 2);
}

TEST_CASE("numerical failures exit with 3") {
    const fs::path dir = scratch("numerical");
    // Lossless cavity with no port coupling, sampled exactly on its pole.
    const json cfg = {{"system",
                       {{"cavity", {{"frequency", 2.9e9}, {"kappa_port1", 0}, {"kappa_port2", 0}, {"kappa_internal", 0}}},
                        {"microwave", {{"frequency", 2.6e9}, {"kappa_internal", 0}}}}},
                      {"grid", json::array({2.8e9, 2.9e9, 3.0e9})}};
    write(dir / "pole.json", cfg.dump());
    const Outcome o = run_cli("simulate --config \"" + (dir / "pole.json").string() + "\" --out \"" + (dir / "o").string() + "\"", dir);
    INFO(o.err);
    CHECK(o.code == hybridspec::cli::kExitNumerical);
    CHECK(error_of(o)["error"]["kind"] == "numerical");
}

TEST_CASE("io failures exit with 4") {
    const fs::path dir = scratch("io");
    const Outcome missing = run_cli("simulate --config \"" + (dir / "nope.json").string() + "\" --out \"" + (dir / "o").string() + "\"", dir);
    CHECK(missing.code == hybridspec::cli::kExitIo);
    CHECK(error_of(missing)["error"]["kind"] == "io");

    write(dir / "blocker", "a file where a directory is expected");
    const Outcome blocked = run_cli("simulate --config \"" + (kExamples / "simulate.json").string() + "\" --out \"" +
                                        (dir / "blocker" / "sub").string() + "\"", dir);
    CHECK(blocked.code == hybridspec::cli::kExitIo);
}

TEST_CASE("config fragments parse units") {
    const auto grid = hybridspec::cli::parse_frequency_grid(json{{"start", "1 GHz"}, {"stop", "2 GHz"}, {"points", 3}}, "g");
    CHECK(grid == std::vector<double>{1e9, 1.5e9, 2e9});
    const auto t = hybridspec::cli::parse_tuning(
        json{{"frequency_0", "2.65 GHz"}, {"alpha_k", 0.5}, {"i_star_eff", "0.1 A"}, {"coil_cal", 0.01}}, "t");
    CHECK_THAT(t.i_star_eff, Catch::Matchers::WithinRel(100.0, 1e-12));
    CHECK_THROWS_AS(hybridspec::cli::parse_tuning(json{{"frequency_0", 1e9}, {"i_star_eff", 10}, {"alpha_k", 2}}, "t"),
                    hybridspec::ConfigError);
    const auto ga = hybridspec::cli::parse_ga(json{{"population", 10}, {"seed", 4}}, "ga");
    CHECK(ga.population == 10);
    CHECK(ga.seed == 4);
    CHECK_THROWS_AS(hybridspec::cli::parse_ga(json{{"popsize", 10}}, "ga"), hybridspec::ConfigError);
}
