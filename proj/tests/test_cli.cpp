#include "catch_amalgamated.hpp"

#include "restrictlab/cli/acceptance.hpp"
#include "restrictlab/cli/commands.hpp"
#include "restrictlab/cli/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace restrictlab;
using namespace restrictlab::cli;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

const std::string kCli = RESTRICTLAB_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("restrictlab-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path file(const std::string& name, const std::string& content) const {
        write_atomic(path / name, content);
        return path / name;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) { return run_process(shell_quote(kCli) + " " + args + " >/dev/null 2>&1"); }

std::string cli_stderr(const std::string& args, const fs::path& capture) {
    run_process(shell_quote(kCli) + " " + args + " >/dev/null 2>" + shell_quote(capture.string()));
    return slurp(capture);
}

const std::string kSign = R"({
  "schema_version": 1,
  "sigma": {"mode": "sign-points", "points": [0.25, 0.75]},
  "grid": {"sizes": [64, 128]},
  "m": 10
})";

const std::string kZero = R"({"schema_version": 1, "grid": {"sizes": [32, 48, 64]}, "m": 4})";

} // namespace

TEST_CASE("config defaults and normalization") {
    const auto c = parse_config_text(R"({"schema_version": 1})");
    CHECK(c.order == 2);
    CHECK(c.fixed == diffop::BoundaryChoice::dirichlet_n2);
    CHECK(c.sign == -1.0);
    CHECK(c.sigma.mode == "zero");
    CHECK(c.sizes == std::vector<std::size_t>{64, 128, 256});
    CHECK(c.m == 10);
    CHECK(c.tol["density"] == 1e-10);
    CHECK(c.tol["riesz_drift"] == 0.10);
    const auto echo = to_json(c);
    CHECK(echo["fixed"] == "dirichlet_n2");
    CHECK_FALSE(echo.contains("output_dir"));

    const auto a = parse_config_text(R"({"schema_version": 1, "order": 3, "fixed": "antiperiodic_sum",
        "sigma": {"mode": "sign-points", "points": [0.2, 0.5, 0.7]}, "grid": {"sizes": [128, 64, 64]}})");
    CHECK(a.sign == 1.0);
    CHECK(a.sigma.kind == "step");
    CHECK(a.sizes == std::vector<std::size_t>{64, 128});
}

TEST_CASE("config values") {
    SECTION("complex coefficients as [re, im]") {
        const auto c = parse_config_text(R"({"schema_version": 1,
            "sigma": {"mode": "polynomial", "coefficients": [[1, [0, 2]], [[3, -1]]]}})");
        REQUIRE(c.sigma.coefficients.size() == 2);
        CHECK(c.sigma.coefficients[0][1] == numgrid::cplx(0.0, 2.0));
        CHECK(c.sigma.coefficients[1][0] == numgrid::cplx(3.0, -1.0));
    }
    SECTION("paired sign points build the paired kernel") {
        const auto c = parse_config_text(kSign);
        CHECK(c.sigma.kind == "paired");
        const auto spec = make_spec(c);
        CHECK_THAT(diffop::build_U(spec).det.real(), WithinAbs(0.25, 1e-12));
    }
    SECTION("tabulated densities") {
        const auto c = parse_config_text(R"({"schema_version": 1,
            "sigma": {"mode": "tabulated", "x": [0, 0.5, 1], "values": [[0, 1, 0], [1, 1, 1]]}})");
        const auto spec = make_spec(c);
        CHECK(spec.grid_breaks == std::vector<double>{0.5});
        CHECK(std::abs(spec.sigma_n[0](0.25) - 0.5) <= 1e-15);
    }
    SECTION("boundary values mark the kernel inadmissible") {
        const auto c = parse_config_text(R"({"schema_version": 1,
            "sigma": {"mode": "sign-points", "points": [0.25, 0.75], "boundary_values": [[1, 0], [0, 0]]}})");
        CHECK_FALSE(make_spec(c).admissible());
    }
    SECTION("tolerance overrides") {
        auto c = parse_config_text(R"({"schema_version": 1, "tolerances": {"identity": 1e-9}})");
        CHECK(c.tol["identity"] == 1e-9);
        c.tol.set_from_arg("jump=2e-4");
        CHECK(c.tol["jump"] == 2e-4);
        CHECK_THROWS_WITH(c.tol.set_from_arg("jump"), ContainsSubstring("NAME=VALUE"));
        CHECK_THROWS_WITH(c.tol.set_from_arg("jump=abc"), ContainsSubstring("not a number"));
        CHECK_THROWS_WITH(c.tol.set_from_arg("nope=1"), ContainsSubstring("unknown tolerance 'nope'"));
        CHECK_THROWS_WITH(c.tol.set_from_arg("jump=-1"), ContainsSubstring("must be positive"));
    }
}

TEST_CASE("config diagnostics") {
    auto err = [](const std::string& text) {
        try {
            parse_config_text(text, "s.json");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK_THAT(err("{\n  \"schema_version\": 1,\n  \"m\": ,\n}"), ContainsSubstring("s.json:3:"));
    CHECK_THAT(err(R"({"m": 3})"), ContainsSubstring("'schema_version': missing"));
    CHECK_THAT(err(R"({"schema_version": 2})"), ContainsSubstring("unsupported version"));
    CHECK_THAT(err(R"({"schema_version": 1, "colour": 1})"), ContainsSubstring("'colour': unknown field"));
    CHECK_THAT(err(R"({"schema_version": 1, "sigma": {"mode": "x"}})"), ContainsSubstring("'sigma.mode'"));
    CHECK_THAT(err(R"({"schema_version": 1, "sigma": {"mode": "sign-points", "points": [0.7, 0.3]}})"),
               ContainsSubstring("strictly increasing"));
    CHECK_THAT(err(R"({"schema_version": 1, "sigma": {"mode": "sign-points", "points": [0.0, 0.3]}})"),
               ContainsSubstring("inside (0,1)"));
    CHECK_THAT(err(R"({"schema_version": 1, "sigma": {"mode": "sign-points", "points": [0.3]}})"),
               ContainsSubstring("'sigma.points'"));
    CHECK_THAT(err(R"({"schema_version": 1, "grid": {"sizes": [4]}})"), ContainsSubstring(">= 8"));
    CHECK_THAT(err(R"({"schema_version": 1, "grid": {"sizes": [16.5]}})"), ContainsSubstring("'grid.sizes[0]'"));
    CHECK_THAT(err(R"({"schema_version": 1, "m": 0})"), ContainsSubstring("'m': must be >= 1"));
    CHECK_THAT(err(R"({"schema_version": 1, "order": 3})"), ContainsSubstring("dirichlet_n2 needs order 2"));
    CHECK_THAT(err(R"({"schema_version": 1, "sign": 2})"), ContainsSubstring("'sign'"));
    CHECK_THAT(err(R"({"schema_version": 1, "fixed": "antiperiodic_sum",
        "sigma": {"mode": "sign-points", "points": [0.3, 0.6], "kind": "paired"}})"),
               ContainsSubstring("'sigma.kind'"));
    CHECK_THAT(err(R"({"schema_version": 1, "sigma": {"mode": "tabulated", "x": [0, 1], "values": [[1, 2], [1]]}})"),
               ContainsSubstring("'sigma.values[1]'"));
    CHECK_THAT(err(R"({"schema_version": 1, "tolerances": {"jump": "big"}})"), ContainsSubstring("'tolerances.jump'"));
}

TEST_CASE("report primitives") {
    SECTION("17 significant digits round-trip") {
        for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300}) CHECK(std::stod(fmt(v)) == v);
    }
    SECTION("csv") {
        CsvTable t({"a", "b"});
        t.row({"1", "2"});
        CHECK(t.str() == "a,b\n1,2\n");
        CHECK_THROWS(t.row({"1"}));
    }
    SECTION("atomic write leaves only the target") {
        TempDir d;
        write_atomic(d.path / "sub" / "x.txt", "one");
        write_atomic(d.path / "sub" / "x.txt", "two");
        CHECK(slurp(d.path / "sub" / "x.txt") == "two");
        std::size_t count = 0;
        for ([[maybe_unused]] const auto& e : fs::directory_iterator(d.path / "sub")) ++count;
        CHECK(count == 1);
    }
    SECTION("each check is recorded once") {
        CheckList c;
        c.at_most("x", 1.0, 2.0);
        CHECK_THROWS_WITH(c.at_most("x", 1.0, 2.0), ContainsSubstring("recorded twice"));
        c.above("y", 1.0, 2.0);
        CHECK_FALSE(c.all_pass());
    }
}

TEST_CASE("in-process commands") {
    TempDir d;
    auto c = parse_config_text(kZero);
    c.output_dir = d.path.string();
    SECTION("sigma = 0 gives A_K = L") {
        const auto r = run_command("similarity", c);
        CHECK(r.pass);
        bool seen = false;
        for (const auto& chk : r.report["checks"]) {
            if (chk["name"] == "N=64: ||A_K - L|| / ||L|| for sigma = 0") {
                seen = true;
                CHECK(chk["value"].get<double>() == 0.0);
            }
        }
        CHECK(seen);
    }
    SECTION("converge against (k pi)^2") {
        const auto r = run_command("converge", c);
        CHECK(r.pass);
        CHECK(r.report["reference"] == "exact");
        CHECK(fs::exists(d.path / "converge.csv"));
    }
    SECTION("unknown command") { CHECK_THROWS_AS(run_command("nope", c), ConfigError); }
    SECTION("converge needs three grids") {
        c.sizes = {32, 64};
        CHECK_THROWS_WITH(run_command("converge", c), ContainsSubstring("at least 3"));
    }
}

TEST_CASE("CLI exit codes") {
    TempDir d;
    const auto out = shell_quote((d.path / "out").string());
    const auto zero = shell_quote(d.file("zero.json", kZero).string());
    CHECK(run_cli("similarity --config " + zero + " --out " + out) == kExitOk);
    CHECK(fs::exists(d.path / "out" / "similarity.json"));

    const auto deg = shell_quote(d.file("deg.json", acceptance_detail::degenerate_config_json()).string());
    CHECK(run_cli("similarity --config " + deg + " --out " + out) == kExitDegenerate);
    CHECK(run_cli("spectrum --config " + deg + " --out " + out) == kExitDegenerate);
    CHECK_THAT(cli_stderr("solve --config " + deg + " --out " + out, d.path / "err.txt"), ContainsSubstring("not densely defined"));

    const auto syntax = shell_quote(d.file("syntax.json", "{\n\"schema_version\": 1,,\n}").string());
    CHECK(run_cli("spectrum --config " + syntax) == kExitConfig);
    CHECK_THAT(cli_stderr("spectrum --config " + syntax, d.path / "err.txt"), ContainsSubstring("syntax.json:2:"));
    CHECK(run_cli("spectrum --config " + zero + " --tol bogus=1 --out " + out) == kExitConfig);
    CHECK(run_cli("spectrum --config " + zero + " -m 0 --out " + out) == kExitConfig);
    CHECK(run_cli("spectrum") == kExitConfig);
    CHECK(run_cli("frobnicate --config " + zero) == kExitConfig);
    CHECK(run_cli("spectrum --config " + shell_quote((d.path / "missing.json").string())) == kExitIo);
    d.file("blocker", "");
    CHECK(run_cli("spectrum --config " + zero + " --out " + shell_quote((d.path / "blocker" / "x").string())) == kExitIo);
    CHECK(run_process("RESTRICTLAB_THREADS=zero " + shell_quote(kCli) + " converge --config " + zero + " --out " + out +
                      " >/dev/null 2>&1") == kExitConfig);
}

TEST_CASE("CLI reports") {
    TempDir d;
    const auto sign = shell_quote(d.file("sign.json", kSign).string());
    SECTION("spectrum CSV columns and rows") {
        REQUIRE(run_cli("spectrum --config " + sign + " --out " + shell_quote((d.path / "a").string())) == kExitOk);
        std::istringstream csv(slurp(d.path / "a" / "spectrum.csv"));
        std::string header, line;
        std::getline(csv, header);
        CHECK(header == "N,k,re_LK,im_LK,re_AK,im_AK,deviation,max_deviation");
        std::size_t rows = 0;
        while (std::getline(csv, line)) {
            ++rows;
            CHECK(std::count(line.begin(), line.end(), ',') == 7);
        }
        CHECK(rows == 20);
        CHECK(fs::exists(d.path / "a" / "eigenfunctions" / "LK_01_re.dat"));
        const auto report = json::parse(slurp(d.path / "a" / "spectrum.json"));
        CHECK(report["command"] == "spectrum");
        CHECK(report["scenario"]["sigma"]["points"] == json::array({0.25, 0.75}));
    }
    SECTION("identical config gives byte-identical output") {
        const auto a = shell_quote((d.path / "a").string()), b = shell_quote((d.path / "b").string());
        REQUIRE(run_cli("spectrum --config " + sign + " --out " + a) == kExitOk);
        REQUIRE(run_process("RESTRICTLAB_THREADS=1 " + shell_quote(kCli) + " spectrum --config " + sign + " --out " + b +
                            " >/dev/null 2>&1") == kExitOk);
        CHECK(slurp(d.path / "a" / "spectrum.csv") == slurp(d.path / "b" / "spectrum.csv"));
        CHECK(slurp(d.path / "a" / "spectrum.json") == slurp(d.path / "b" / "spectrum.json"));
        CHECK(slurp(d.path / "a" / "eigenfunctions" / "LK_07_re.dat") == slurp(d.path / "b" / "eigenfunctions" / "LK_07_re.dat"));
    }
    SECTION("inadmissible sigma probes as unbounded") {
        const auto bad = shell_quote(d.file("bad.json", R"({"schema_version": 1,
            "sigma": {"mode": "sign-points", "points": [0.25, 0.75], "boundary_values": [[1, 0], [0, 0]]}})")
                                         .string());
        REQUIRE(run_cli("probe-lemma21 --config " + bad + " --out " + shell_quote((d.path / "p").string())) == kExitOk);
        const auto report = json::parse(slurp(d.path / "p" / "probe-lemma21.json"));
        CHECK(report["verdict"] == "unbounded");
        CHECK(report["grids"].size() == 3);
        CHECK(report["grids"][2]["ratio_to_first"].get<double>() > 2.0);
    }
    SECTION("failed checks exit with 5") {
        const auto t = shell_quote((d.path / "t").string());
        CHECK(run_cli("spectrum --config " + sign + " --tol similarity=1e-30 --out " + t) == kExitCheckFailed);
    }
}
