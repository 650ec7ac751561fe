#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "config.hpp"
#include "scenarios.hpp"
#include "tdsr/error.hpp"

using namespace tdsr;
using namespace tdsr::app;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "tdsr");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "tdsr-cli-test" / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# tdsr-csv v1", 0) == 0);
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("config grammar") {
    const auto a = parse_config_text("# header\n[time]\nt_end = 3.6/pi  # comment\n\n[solver]\nlaws = kdv_mass, kdv_momentum\n", "t");
    REQUIRE(a.size() == 2);
    CHECK(a[0].key == "time.t_end");
    CHECK(a[0].value == "3.6/pi");
    CHECK(a[0].line == 3);
    CHECK(a[1].key == "solver.laws");

    CHECK_THROWS_AS(parse_config_text("t_end = 1\n", "t"), Error);
    CHECK_THROWS_AS(parse_config_text("[time\n", "t"), Error);
    CHECK_THROWS_AS(parse_config_text("[time]\nno value\n", "t"), Error);
    CHECK(parse_real("2*pi") == doctest::Approx(2.0 * 3.141592653589793));
    CHECK_THROWS_AS(parse_real("1e"), Error);

    auto s = scenario_defaults("kdv-soliton-momentum");
    CHECK_THROWS_AS(s.set("grid.points", "many"), Error);
    CHECK_THROWS_AS(s.set("solver.check_identities", "maybe"), Error);
    CHECK_THROWS_AS(s.set("model.gamma", "1"), Error);
    s.set("solver.laws", "kdv_mass, kdv_hamiltonian");
    CHECK(s.list("solver.laws") == std::vector<std::string>{"kdv_mass", "kdv_hamiltonian"});

    // Rendered settings read back to the same values.
    auto t = scenario_defaults("kdv-soliton-momentum");
    for (const auto& as : parse_config_text(s.render(), "r")) t.set(as.key, as.value);
    CHECK(t.render() == s.render());
}

TEST_CASE("scenario catalog") {
    const std::vector<std::string> names{"kdv-soliton-momentum", "zabusky-kruskal",    "ac-travelling-wave",
                                         "ac-metastable",        "kdv-mass-momentum",  "kdv-two-soliton",
                                         "kdv-mass-hamiltonian", "kdv-three-laws",     "nls2d-townes"};
    const auto r = cli({"list", "--tsv"});
    CHECK(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::size_t i = 0;
    while (std::getline(in, line)) {
        REQUIRE(i < names.size());
        CHECK(line.rfind(names[i] + "\tFig", 0) == 0);
        CHECK(std::count(line.begin(), line.end(), '\t') == 2);
        ++i;
    }
    CHECK(i == names.size());
    CHECK(cli({"list", "--tsv"}).out == r.out);
    CHECK(cli({"list"}).out.find("Fig. 11") != std::string::npos);

    for (const auto& n : names) CHECK_NOTHROW(scenario_defaults(n));
}

TEST_CASE("soliton run writes its artifacts") {
    const auto dir = scratch("soliton");
    const auto r = cli({"run", "kdv-soliton-momentum", "--out", dir.string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"manifest.txt", "invariants.csv", "error.csv", "history.csv", "blocks.csv", "factors.csv",
                          "snapshot_t0.csv", "snapshot_t5.csv", "snapshot_t10.csv"})
        CHECK(fs::exists(dir / f));
    const auto inv = read_csv(dir / "invariants.csv");
    REQUIRE(inv.size() == 501);
    CHECK(inv.back()[0] == doctest::Approx(10.0));
    // Columns: t, then (value, absolute, relative) for mass, momentum, Hamiltonian.
    CHECK(inv.back()[6] <= 1e-13);
    const auto err = read_csv(dir / "error.csv");
    CHECK(err.back()[1] <= 1e-9);
    CHECK(slurp(dir / "manifest.txt").find("name = kdv-soliton-momentum") != std::string::npos);
}

TEST_CASE("Zabusky-Kruskal snapshot shows the eight-soliton train") {
    const auto dir = scratch("zk");
    const auto r = cli({"run", "zabusky-kruskal", "--out", dir.string(), "--set", "time.t_end=3.6/pi", "--set",
                        "time.blocks=72", "--set", "output.snapshots=3.6/pi"});
    REQUIRE(r.code == 0);
    const auto snap = read_csv(dir / "snapshot_t1.14592.csv");
    REQUIRE(snap.size() == 256);
    int peaks = 0;
    for (std::size_t i = 0; i < snap.size(); ++i) {
        const double a = snap[(i + snap.size() - 1) % snap.size()][1], b = snap[i][1],
                     c = snap[(i + 1) % snap.size()][1];
        if (b > a && b > c) ++peaks;
    }
    CHECK(peaks == 8);
}

TEST_CASE("exit codes") {
    SUBCASE("law foreign to the model") {
        const auto r = cli({"run", "kdv-soliton-momentum", "--out", scratch("bad-law").string(), "--set",
                            "solver.laws=nls_power"});
        CHECK(r.code == 2);
        CHECK(r.err.find("validation") != std::string::npos);
    }
    SUBCASE("unknown key") { CHECK(cli({"run", "kdv-soliton-momentum", "--set", "grid.nodes=4"}).code == 2); }
    SUBCASE("unknown scenario") { CHECK(cli({"run", "heat"}).code == 2); }
    SUBCASE("bad flag") { CHECK(cli({"run", "--frobnicate"}).code == 2); }
    SUBCASE("step not commensurate") {
        CHECK(cli({"run", "kdv-soliton-momentum", "--set", "time.dt=0.03", "--out", scratch("dt").string()}).code == 2);
    }
    SUBCASE("config file errors name the line") {
        const auto dir = scratch("cfg");
        fs::create_directories(dir);
        std::ofstream(dir / "c.conf") << "[scenario]\nname = kdv-soliton-momentum\n[grid]\nspacing = 1\n";
        const auto r = cli({"run", "--config", (dir / "c.conf").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find("c.conf:4") != std::string::npos);
    }
    SUBCASE("split with too few parts") {
        CHECK(cli({"run", "kdv-three-laws", "--set", "solver.split=bell_sech", "--out", scratch("split").string()})
                  .code == 2);
    }
    SUBCASE("unwritable output") {
        const auto dir = scratch("io");
        fs::create_directories(dir);
        std::ofstream(dir / "file") << "x";
        CHECK(cli({"run", "kdv-soliton-momentum", "--out", (dir / "file" / "sub").string()}).code == 4);
    }
    SUBCASE("solver failure keeps partial artifacts") {
        const auto dir = scratch("fail");
        const auto r = cli({"run", "kdv-three-laws", "--out", dir.string()});
        CHECK(r.code == 3);
        CHECK(fs::exists(dir / "manifest.txt"));
        CHECK(fs::exists(dir / "history.csv"));
        CHECK(fs::exists(dir / "blocks.csv"));
    }
}

TEST_CASE("output directory from the environment") {
    const auto root = scratch("env");
    ::setenv("TDSR_OUT_DIR", root.c_str(), 1);
    const auto r = cli({"run", "kdv-soliton-momentum", "--set", "grid.points=512", "--set", "time.t_end=1",
                        "--set", "time.steps=50", "--set", "output.snapshots=1"});
    ::unsetenv("TDSR_OUT_DIR");
    CHECK(r.code == 0);
    CHECK(fs::exists(root / "kdv-soliton-momentum" / "snapshot_t1.csv"));
}

TEST_CASE("seeded runs are byte-identical and replay from the manifest") {
    const std::vector<std::string> args{"--set", "grid.points=512", "--set", "time.t_end=2", "--set",
                                        "time.steps=100", "--set", "solver.guess=random", "--seed", "7",
                                        "--set", "output.field=true"};
    const auto a = scratch("det-a"), b = scratch("det-b"), c = scratch("det-c");
    auto with = [&](const fs::path& out) {
        std::vector<std::string> v{"run", "kdv-soliton-momentum", "--out", out.string()};
        v.insert(v.end(), args.begin(), args.end());
        return v;
    };
    REQUIRE(cli(with(a)).code == 0);
    REQUIRE(cli(with(b)).code == 0);
    REQUIRE(cli({"run", "--config", (a / "manifest.txt").string(), "--out", c.string()}).code == 0);
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto name = entry.path().filename();
        CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name.string());
        CHECK_MESSAGE(slurp(a / name) == slurp(c / name), name.string());
    }
    CHECK(fs::file_size(a / "field.bin") == 101 * 512 * sizeof(double));
}

TEST_CASE("sweep and compare") {
    const auto dir = scratch("sweep");
    const auto r = cli({"sweep", "kdv-soliton-momentum", "--out", dir.string(), "--levels", "3", "--set",
                        "grid.points=1024", "--set", "time.t_end=2", "--set", "time.dt=0.08"});
    REQUIRE(r.code == 0);
    const auto order = read_csv(dir / "order.csv");
    CHECK(order[0][0] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(cli({"sweep", "zabusky-kruskal", "--out", scratch("sweep-zk").string()}).code == 2);

    const auto cmp = scratch("compare");
    REQUIRE(cli({"compare", "ac-travelling-wave", "--out", cmp.string(), "--set", "grid.points=128"}).code == 0);
    const auto rows = read_csv(cmp / "compare.csv");
    CHECK(rows.size() == 161);
    CHECK(rows.back()[0] == doctest::Approx(0.02));
}
