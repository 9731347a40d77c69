#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

// End-to-end checks of the installed binary: every test spawns the real
// executable so the exit-code contract and stream layout are what a shell
// script would actually see.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "vpwave_cli_scratch";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out = scratch_dir() / ("stdout." + std::to_string(counter));
    const fs::path err = scratch_dir() / ("stderr." + std::to_string(counter));
    ++counter;
    const std::string cmd = std::string("\"") + VPWAVE_CLI_PATH + "\" " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// The manifest is the last stderr line; everything before it is diagnostics.
json manifest_of(const std::string& err) {
    std::string line, last;
    std::istringstream in(err);
    while (std::getline(in, line))
        if (line.rfind("manifest ", 0) == 0) last = line;
    REQUIRE(!last.empty());
    return json::parse(last.substr(9));
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch_dir() / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

// One clean in-model dataset shared by the fit/dynamics pipeline tests.
fs::path clean_bessel_csv() {
    static const fs::path path = [] {
        const fs::path p = scratch_dir() / "clean_bessel.csv";
        const auto r = run_cli(
            "synth --family bessel --omega 5 --p0 10.00 --lo 9.70 --hi 10.295 "
            "--tick 0.01 --volume 1000000 --trades 600 --seed 1 --out " +
            p.string());
        REQUIRE(r.exit_code == 0);
        return p;
    }();
    return path;
}

}  // namespace

TEST_CASE("help exits zero and lists subcommands") {
    const auto r = run_cli("--help");
    CHECK(r.exit_code == 0);
    for (const char* sub : {"fit", "batch", "synth", "oracle", "dynamics"})
        CHECK(contains(r.out, sub));
}

TEST_CASE("usage errors exit 2") {
    CHECK(run_cli("").exit_code == 2);                         // missing subcommand
    CHECK(run_cli("flit").exit_code == 2);                     // unknown subcommand
    CHECK(run_cli("fit").exit_code == 2);                      // missing required input
    CHECK(run_cli("synth --no-such-flag").exit_code == 2);
    CHECK(run_cli("oracle --mode parabolic").exit_code == 2);  // rejected mode
}

TEST_CASE("synth is deterministic and carries the schema header") {
    const fs::path a = scratch_dir() / "synth_a.csv";
    const fs::path b = scratch_dir() / "synth_b.csv";
    const std::string flags =
        "synth --omega 4 --p0 10.00 --lo 9.5 --hi 10.5 --volume 50000 --trades 200 "
        "--noise 0.1 --seed 42 --out ";
    REQUIRE(run_cli(flags + a.string()).exit_code == 0);
    REQUIRE(run_cli(flags + b.string()).exit_code == 0);
    const std::string text = slurp(a);
    CHECK(text == slurp(b));
    CHECK(text.rfind("# schema_version=1\ntimestamp,price,volume\n", 0) == 0);
    CHECK(count_lines(text) == 202);  // header pair + one row per trade

    const auto other = run_cli(
        "synth --omega 4 --p0 10.00 --lo 9.5 --hi 10.5 --volume 50000 --trades 200 "
        "--noise 0.1 --seed 43");
    CHECK(other.exit_code == 0);
    CHECK(other.out != text);
}

TEST_CASE("fit pipeline: ladder verdict, JSON report, plot CSV, manifest") {
    const fs::path in = clean_bessel_csv();
    const fs::path report = scratch_dir() / "fit.json";
    const fs::path plot = scratch_dir() / "plot.csv";
    const auto r = run_cli("fit " + in.string() + " --out " + report.string() + " --plot-out " +
                           plot.string());
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "verdict: significant"));
    CHECK(contains(r.out, "bessel"));

    const json j = json::parse(slurp(report));
    CHECK(j.at("schema_version") == 1);
    REQUIRE(j.contains("ladder"));
    CHECK(j["ladder"].at("chosen") == 0);
    const auto& fit0 = j["ladder"]["attempts"].at(0).at("result");
    CHECK(fit0.at("significant") == true);
    CHECK(std::abs(fit0.at("spec").at("params").at("omega").get<double>() - 5.0) < 0.05);

    const std::string plot_text = slurp(plot);
    CHECK(plot_text.rfind("# schema_version=1\nprice,empirical_p,model_p,residual\n", 0) == 0);
    CHECK(count_lines(plot_text) == 62);  // header pair + 60 price levels

    const json man = manifest_of(r.err);
    CHECK(man.at("command") == "fit");
    CHECK(man.at("tool_version") == "0.1.0");
    CHECK(man.at("inputs") == json::array({in.string()}));
    CHECK(man.at("outputs") == json::array({report.string(), plot.string()}));
    CHECK(man.at("finished_ms").get<std::int64_t>() >= man.at("started_ms").get<std::int64_t>());
}

TEST_CASE("fit --family restricts the ladder to one family") {
    const fs::path in = clean_bessel_csv();
    const auto r = run_cli("fit " + in.string() + " --family kummer --kummer-order 1");
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "sqrt_a="));
    CHECK(!contains(r.out, "omega1="));  // no ladder, single family only
}

TEST_CASE("fit input errors exit 2") {
    const fs::path empty = write_file("empty.csv", "");
    CHECK(run_cli("fit " + empty.string()).exit_code == 2);
    CHECK(run_cli("fit " + (scratch_dir() / "no_such_file.csv").string()).exit_code == 2);
    const fs::path bad = write_file("bad.csv", "timestamp,price,volume\n1000,ten,100\n");
    CHECK(run_cli("fit " + bad.string()).exit_code == 2);
    const fs::path offgrid = write_file("offgrid.csv", "timestamp,price,volume\n1000,10.005,100\n");
    CHECK(run_cli("fit " + offgrid.string() + " --tick 0.01").exit_code == 2);
}

TEST_CASE("batch over a directory reports per-file rows and the significant fraction") {
    const fs::path dir = scratch_dir() / "batch_in";
    fs::create_directories(dir);
    for (int seed : {11, 12, 13}) {
        const auto r = run_cli(
            "synth --omega 5 --p0 10.00 --lo 9.70 --hi 10.295 --volume 200000 --trades 400 "
            "--noise 0.05 --seed " +
            std::to_string(seed) + " --out " + (dir / ("s" + std::to_string(seed) + ".csv")).string());
        REQUIRE(r.exit_code == 0);
    }
    const fs::path out = scratch_dir() / "batch.csv";
    const auto r = run_cli("batch " + dir.string() + " --jobs 2 --out " + out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "3 files, 3 significant"));

    const std::string text = slurp(out);
    CHECK(contains(text, "file,family,omega_or_sqrt_a,p0,r_squared,r_squared_crit,significant,status"));
    CHECK(contains(text, "# significant_fraction=1.0000 (3/3)"));
    CHECK(count_lines(text) == 6);  // schema + header + 3 rows + footer

    SUBCASE("a corrupt file yields an error row, not a failed run") {
        std::ofstream(dir / "corrupt.csv") << "timestamp,price,volume\n1000,-3.0,50\n";
        const auto r2 = run_cli("batch " + dir.string() + " --out " + out.string());
        CHECK(r2.exit_code == 0);
        const std::string t2 = slurp(out);
        CHECK(contains(t2, "error:"));
        CHECK(contains(t2, "# significant_fraction=0.7500 (3/4)"));
    }
}

TEST_CASE("batch with nothing usable fails") {
    const fs::path dir = scratch_dir() / "batch_bad";
    fs::create_directories(dir);
    CHECK(run_cli("batch " + dir.string()).exit_code == 2);  // no CSVs at all
    std::ofstream(dir / "junk.csv") << "not,a,trade\nfile,at,all\n";
    CHECK(run_cli("batch " + dir.string()).exit_code == 3);  // every file errored
}

TEST_CASE("oracle reports residuals consistent with the analytic solutions") {
    const auto bessel = run_cli("oracle --mode bessel --omega 5");
    REQUIRE(bessel.exit_code == 0);
    double res = -1.0;
    REQUIRE(std::sscanf(bessel.out.c_str(), "max_abs_residual=%lf", &res) == 1);
    CHECK(res >= 0.0);
    CHECK(res <= 1e-6);

    const fs::path out = scratch_dir() / "oracle.json";
    const auto kummer = run_cli("oracle --mode kummer --m 1 --E 3 --out " + out.string());
    REQUIRE(kummer.exit_code == 0);
    const json j = json::parse(slurp(out));
    CHECK(j.at("report").at("max_abs_residual").get<double>() <= 1e-6);

    const auto search = run_cli("oracle --mode kummer --search --m 2 --E 2");
    REQUIRE(search.exit_code == 0);
    CHECK(contains(search.out, "A(shooting)="));
    double shooting = -1.0, ladder = -1.0, rel = -1.0;
    REQUIRE(std::sscanf(search.out.c_str(), "A(shooting)=%lf A(ladder)=%lf rel_diff=%lf",
                        &shooting, &ladder, &rel) == 3);
    CHECK(rel <= 1e-6);

    // an off-ladder sqrt(A) is the negative control: residual visibly nonzero
    const auto off = run_cli("oracle --mode kummer --m 1 --E 3 --sqrt-a 1.1");
    REQUIRE(off.exit_code == 0);
    double off_res = -1.0;
    REQUIRE(std::sscanf(off.out.c_str(), "max_abs_residual=%lf", &off_res) == 1);
    CHECK(off_res > 1e-2);
}

TEST_CASE("dynamics consumes a fit report and emits the profile CSV") {
    const fs::path in = clean_bessel_csv();
    const fs::path report = scratch_dir() / "dyn_fit.json";
    REQUIRE(run_cli("fit " + in.string() + " --out " + report.string()).exit_code == 0);

    const fs::path profile = scratch_dir() / "profile.csv";
    const auto r = run_cli("dynamics --in " + report.string() + " --trades " + in.string() +
                           " --out " + profile.string());
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "a_estimate="));
    CHECK(contains(r.out, "dispersion="));

    const std::string text = slurp(profile);
    CHECK(text.rfind("# schema_version=1\nprice,volume,v_t,v_tt,m_t,E,W,F_R,F_T,omega_sq_check",
                     0) == 0);
    CHECK(count_lines(text) == 63);  // schema + header + units + 60 levels

    CHECK(run_cli("dynamics --in " + (scratch_dir() / "missing.json").string() + " --trades " +
                  in.string())
              .exit_code == 2);
    const fs::path not_json = write_file("not_json.json", "this is not json\n");
    CHECK(run_cli("dynamics --in " + not_json.string() + " --trades " + in.string()).exit_code ==
          2);
}

TEST_CASE("kummer synth round-trips through a forced kummer fit") {
    const fs::path p = scratch_dir() / "kummer.csv";
    REQUIRE(run_cli(
                "synth --family kummer --kummer-order 0 --eigen-a 4 --p0 10.00 --lo 9.0 --hi 11.0 "
                "--volume 500000 --trades 500 --seed 9 --out " +
                p.string())
                .exit_code == 0);
    const auto r = run_cli("fit " + p.string() + " --family kummer --kummer-order 0");
    REQUIRE(r.exit_code == 0);
    CHECK(contains(r.out, "verdict: significant"));
    CHECK(contains(r.out, "m=0"));
}
