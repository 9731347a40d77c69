#include "vpwave/dynamics.hpp"
#include "vpwave/errors.hpp"
#include "vpwave/fitting.hpp"
#include "vpwave/marketdata.hpp"
#include "vpwave/models.hpp"
#include "vpwave/oracle.hpp"
#include "vpwave/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vpwave;

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kToolVersion = "0.1.0";

// Run metadata goes to standard error, not into artifacts: artifact bytes must
// be reproducible from flags + inputs + seed, and timestamps are not.
struct RunManifest {
    std::string command;
    std::vector<std::string> inputs;
    json config;
    std::vector<std::string> outputs;
    std::int64_t started_ms = 0;
    std::int64_t finished_ms = 0;
};

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void emit_manifest(RunManifest& m) {
    m.finished_ms = now_ms();
    json j{{"schema_version", kSchemaVersion}, {"command", m.command},
           {"inputs", m.inputs},              {"config", m.config},
           {"outputs", m.outputs},            {"tool_version", kToolVersion},
           {"started_ms", m.started_ms},      {"finished_ms", m.finished_ms}};
    std::cerr << "manifest " << j.dump() << "\n";
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const EmptyInput*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const NonPositivePrice*>(&e) || dynamic_cast<const OffGridPrice*>(&e) ||
        dynamic_cast<const EmptyTrades*>(&e) || dynamic_cast<const MalformedSpec*>(&e) ||
        dynamic_cast<const IoError*>(&e))
        return 2;
    return 3;  // computation failed on well-formed input
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

std::string fit_summary(const FitResult& r) {
    std::ostringstream os;
    os.precision(10);
    os << family_name(r.spec.family);
    switch (r.spec.family) {
        case Family::BesselSingle: {
            const auto& p = r.spec.bessel_params();
            os << "  omega=" << p.omega << "  p0=" << p.p0;
            break;
        }
        case Family::BesselSuperposition: {
            const auto& p = r.spec.superposition_params();
            os << "  omega1=" << p.omega1 << "  p01=" << p.p01 << "  omega2=" << p.omega2
               << "  p02=" << p.p02;
            break;
        }
        case Family::Kummer: {
            const auto& p = r.spec.kummer_params();
            os << "  m=" << p.m << "  sqrt_a=" << std::sqrt(p.a) << "  p0=" << p.p0;
            break;
        }
    }
    os << "  R2=" << r.r_squared << "  R2crit=" << r.r_squared_crit
       << (r.significant ? "  significant" : "  not significant");
    return os.str();
}

void write_plot_csv(const std::string& path, const VolumeAtPrice& dist, const ModelSpec& spec) {
    std::ostringstream os;
    os << "# schema_version=" << kSchemaVersion << "\n";
    os << "price,empirical_p,model_p,residual\n";
    os.precision(12);
    for (std::size_t i = 0; i < dist.levels(); ++i) {
        const double model = eval_model(spec, dist.prices[i]);
        os << dist.prices[i] << "," << dist.probabilities[i] << "," << model << ","
           << dist.probabilities[i] - model << "\n";
    }
    write_text_file(path, os.str());
}

// --- fit ---------------------------------------------------------------

struct FitArgs {
    std::string input;
    double tick = kDefaultTick;
    std::string family;  // empty: run the ladder
    double confidence = 0.95;
    int kummer_order = 1;
    bool tie = false;
    std::string out, plot_out;
};

int cmd_fit(const FitArgs& a) {
    RunManifest man{"fit", {a.input},
                    json{{"tick", a.tick}, {"family", a.family}, {"confidence", a.confidence},
                         {"kummer_order", a.kummer_order}, {"tie", a.tie}},
                    {}, now_ms(), 0};

    const auto trades = ingest_trades_file(a.input);
    const auto dist = build_distribution(trades, a.tick);

    FitOptions opts;
    opts.confidence = a.confidence;
    opts.kummer_order = a.kummer_order;
    opts.tie_superposition = a.tie;

    json payload{{"schema_version", kSchemaVersion}};
    const FitResult* chosen = nullptr;
    std::optional<FitResult> single;
    std::optional<LadderReport> ladder;

    if (a.family.empty()) {
        ladder = run_ladder(dist, opts);
        for (const auto& att : ladder->attempts) {
            if (att.result)
                std::cout << att.label << ": " << fit_summary(*att.result) << "\n";
            else
                std::cout << att.label << ": error: " << att.error << "\n";
        }
        chosen = ladder->chosen_result();
        bool all_failed = true;
        for (const auto& att : ladder->attempts)
            if (att.result) all_failed = false;
        if (all_failed) throw AllStartsDiverged();
        payload["ladder"] = to_json(*ladder);
    } else {
        single = fit(dist, family_from_name(a.family), std::nullopt, opts);
        chosen = &*single;
        std::cout << fit_summary(*single) << "\n";
        payload["fit"] = to_json(*single);
    }

    if (chosen)
        std::cout << "verdict: " << (chosen->significant ? "significant" : "not significant")
                  << "\n";
    else
        std::cout << "verdict: no significant fit\n";

    if (!a.out.empty()) {
        write_text_file(a.out, payload.dump(2) + "\n");
        man.outputs.push_back(a.out);
    }
    if (!a.plot_out.empty()) {
        const ModelSpec* spec = chosen ? &chosen->spec : nullptr;
        if (!spec && single) spec = &single->spec;
        if (!spec && ladder)  // fall back to the last attempt that produced numbers
            for (const auto& att : ladder->attempts)
                if (att.result) spec = &att.result->spec;
        if (spec) {
            write_plot_csv(a.plot_out, dist, *spec);
            man.outputs.push_back(a.plot_out);
        }
    }
    emit_manifest(man);
    return 0;
}

// --- batch -------------------------------------------------------------

struct BatchArgs {
    std::vector<std::string> paths;
    double tick = kDefaultTick;
    double confidence = 0.95;
    unsigned jobs = 0;
    std::string out;
};

struct BatchRow {
    std::string file;
    std::string family;
    double scale_param = 0.0;  // omega (Bessel) or sqrt(A) (Kummer)
    double p0 = 0.0;
    double r2 = 0.0, r2crit = 0.0;
    bool significant = false;
    bool ok = false;
    std::string status;
};

std::vector<std::string> expand_inputs(const std::vector<std::string>& paths) {
    std::vector<std::string> files;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            std::vector<std::string> here;
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file() && entry.path().extension() == ".csv")
                    here.push_back(entry.path().string());
            std::sort(here.begin(), here.end());
            files.insert(files.end(), here.begin(), here.end());
        } else {
            files.push_back(p);
        }
    }
    return files;
}

BatchRow batch_one(const std::string& file, double tick, const FitOptions& opts) {
    BatchRow row;
    row.file = file;
    try {
        const auto dist = build_distribution(ingest_trades_file(file), tick);
        const auto report = run_ladder(dist, opts);
        const FitResult* r = report.chosen_result();
        if (!r) {
            // keep the last attempt that produced numbers so the row is inspectable
            for (const auto& att : report.attempts)
                if (att.result) r = &att.result.value();
        }
        if (!r) throw AllStartsDiverged();
        row.family = family_name(r->spec.family);
        switch (r->spec.family) {
            case Family::BesselSingle:
                row.scale_param = r->spec.bessel_params().omega;
                row.p0 = r->spec.bessel_params().p0;
                break;
            case Family::BesselSuperposition:
                row.scale_param = r->spec.superposition_params().omega1;
                row.p0 = r->spec.superposition_params().p01;
                break;
            case Family::Kummer:
                row.scale_param = std::sqrt(r->spec.kummer_params().a);
                row.p0 = r->spec.kummer_params().p0;
                break;
        }
        row.r2 = r->r_squared;
        row.r2crit = r->r_squared_crit;
        row.significant = r->significant;
        row.ok = true;
        row.status = "ok";
    } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
    }
    return row;
}

int cmd_batch(const BatchArgs& a) {
    RunManifest man{"batch", a.paths,
                    json{{"tick", a.tick}, {"confidence", a.confidence}, {"jobs", a.jobs}},
                    {}, now_ms(), 0};

    const auto files = expand_inputs(a.paths);
    if (files.empty()) throw EmptyInput();

    FitOptions opts;
    opts.confidence = a.confidence;

    unsigned jobs = a.jobs ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, files.size());

    std::vector<BatchRow> rows(files.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < files.size(); i = next.fetch_add(1))
            rows[i] = batch_one(files[i], a.tick, opts);
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::size_t n_ok = 0, n_sig = 0;
    for (const auto& r : rows) {
        n_ok += r.ok;
        n_sig += r.significant;
    }
    const double fraction =
        rows.empty() ? 0.0 : static_cast<double>(n_sig) / static_cast<double>(rows.size());

    std::ostringstream os;
    os << "# schema_version=" << kSchemaVersion << "\n";
    os << "file,family,omega_or_sqrt_a,p0,r_squared,r_squared_crit,significant,status\n";
    os.precision(10);
    for (const auto& r : rows) {
        os << r.file << ",";
        if (r.ok)
            os << r.family << "," << r.scale_param << "," << r.p0 << "," << r.r2 << ","
               << r.r2crit << "," << (r.significant ? 1 : 0) << "," << r.status << "\n";
        else
            os << ",,,,,," << r.status << "\n";
    }
    char frac[64];
    std::snprintf(frac, sizeof frac, "%.4f", fraction);
    os << "# significant_fraction=" << frac << " (" << n_sig << "/" << rows.size() << ")\n";

    if (!a.out.empty()) {
        write_text_file(a.out, os.str());
        man.outputs.push_back(a.out);
    } else {
        std::cout << os.str();
    }
    std::cout << rows.size() << " files, " << n_sig << " significant (" << frac << "), "
              << rows.size() - n_ok << " errors\n";
    emit_manifest(man);
    return n_ok == 0 ? 3 : 0;
}

// --- synth -------------------------------------------------------------

struct SynthArgs {
    std::string family = "bessel";
    double omega = 5.0, omega2 = 0.0;
    double p0 = 10.0, p02 = 0.0;
    double eigen_a = 25.0;
    int kummer_order = 1;
    double lo = 0.0, hi = 0.0;  // 0: derive from centers
    double tick = kDefaultTick;
    std::int64_t volume = 1000000;
    std::int64_t trades = 1000;
    double noise = 0.0;
    std::uint64_t seed = 0;
    double second_center = 0.0;  // 0: single equilibrium
    double mix = 0.5;
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    RunManifest man{"synth", {},
                    json{{"family", a.family}, {"omega", a.omega}, {"p0", a.p0},
                         {"volume", a.volume}, {"trades", a.trades}, {"noise", a.noise},
                         {"seed", a.seed}},
                    {}, now_ms(), 0};

    SynthConfig cfg;
    const Family fam = family_from_name(a.family);
    switch (fam) {
        case Family::BesselSingle:
            cfg.spec = ModelSpec::bessel(1.0, a.omega, a.p0);
            break;
        case Family::BesselSuperposition: {
            const double w2 = a.omega2 > 0.0 ? a.omega2 : a.omega;
            const double c2 = a.p02 > 0.0 ? a.p02 : a.p0;
            cfg.spec = a.p0 <= c2 ? ModelSpec::superposition(1.0, a.omega, a.p0, w2, c2)
                                  : ModelSpec::superposition(1.0, w2, c2, a.omega, a.p0);
            break;
        }
        case Family::Kummer:
            cfg.spec = ModelSpec::kummer(1.0, a.kummer_order, a.eigen_a, a.p0);
            break;
    }
    double lo = a.lo, hi = a.hi;
    if (lo == 0.0 && hi == 0.0) {
        double cmin = cfg.spec.center(), cmax = cfg.spec.center();
        if (fam == Family::BesselSuperposition) {
            cmin = std::min(cmin, cfg.spec.superposition_params().p02);
            cmax = std::max(cmax, cfg.spec.superposition_params().p02);
        }
        if (a.second_center > 0.0) {
            cmin = std::min(cmin, a.second_center);
            cmax = std::max(cmax, a.second_center);
        }
        lo = cmin - 1.0;
        hi = cmax + 1.0;
    }
    cfg.tick = a.tick;
    cfg.price_lo = lo;
    cfg.price_hi = hi;
    cfg.total_volume = a.volume;
    cfg.trades = a.trades;
    cfg.noise = a.noise;
    cfg.seed = a.seed;

    const auto records = a.second_center > 0.0
                             ? generate_two_equilibrium(cfg, a.second_center, a.mix)
                             : generate(cfg);

    std::ostringstream os;
    os << "# schema_version=" << kSchemaVersion << "\n";
    write_trades_csv(records, os, a.tick);
    if (!a.out.empty()) {
        write_text_file(a.out, os.str());
        man.outputs.push_back(a.out);
        std::cout << records.size() << " trades written to " << a.out << "\n";
    } else {
        std::cout << os.str();
    }
    emit_manifest(man);
    return 0;
}

// --- oracle ------------------------------------------------------------

struct OracleArgs {
    std::string mode = "bessel";
    double omega = 5.0;
    int m = 1;
    double e = 3.0;
    double sqrt_a = 0.0;  // 0: eigenvalue ladder value
    double h = 1e-4;
    bool search = false;
    std::string out;
};

int cmd_oracle(const OracleArgs& a) {
    RunManifest man{"oracle", {},
                    json{{"mode", a.mode}, {"omega", a.omega}, {"m", a.m}, {"E", a.e},
                         {"h", a.h}, {"search", a.search}},
                    {}, now_ms(), 0};

    json payload{{"schema_version", kSchemaVersion}, {"mode", a.mode}};
    if (a.search) {
        if (a.mode != "kummer") throw MalformedSpec("--search applies to --mode kummer");
        const double found = eigenvalue_search(a.m, a.e);
        const double closed = std::pow(a.e / (1.0 + 2.0 * a.m), 2.0);
        const double rel = std::fabs(found - closed) / closed;
        std::cout.precision(12);
        std::cout << "A(shooting)=" << found << "  A(ladder)=" << closed << "  rel_diff=" << rel
                  << "\n";
        payload["search"] = json{{"m", a.m}, {"E", a.e}, {"a_shooting", found},
                                 {"a_ladder", closed}, {"rel_diff", rel}};
    } else {
        const auto grid = standard_oracle_grid();
        ResidualReport report;
        if (a.mode == "bessel") {
            report = bessel_ode_residual(a.omega, grid, a.h);
            payload["omega"] = a.omega;
        } else if (a.mode == "kummer") {
            report = a.sqrt_a > 0.0 ? kummer_ode_residual_at(a.m, a.e, a.sqrt_a, grid, a.h)
                                    : kummer_ode_residual(a.m, a.e, grid, a.h);
            payload["m"] = a.m;
            payload["E"] = a.e;
        } else {
            throw MalformedSpec("--mode must be bessel or kummer");
        }
        std::cout.precision(12);
        std::cout << "max_abs_residual=" << report.max_abs_residual << " at h=" << a.h << "\n";
        payload["report"] = to_json(report);
    }

    if (!a.out.empty()) {
        write_text_file(a.out, payload.dump(2) + "\n");
        man.outputs.push_back(a.out);
    }
    emit_manifest(man);
    return 0;
}

// --- dynamics ----------------------------------------------------------

struct DynArgs {
    std::string fit_json;
    std::string trades_csv;
    double tick = kDefaultTick;
    std::string out;
};

int cmd_dynamics(const DynArgs& a) {
    RunManifest man{"dynamics", {a.fit_json, a.trades_csv}, json{{"tick", a.tick}},
                    {}, now_ms(), 0};

    std::ifstream in(a.fit_json);
    if (!in) throw IoError("cannot open " + a.fit_json);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw MalformedSpec(e.what());
    }

    FitResult fitted;
    if (j.contains("fit")) {
        fitted = fit_result_from_json(j["fit"]);
    } else if (j.contains("ladder")) {
        const auto& ladder = j["ladder"];
        if (!ladder.contains("chosen") || ladder["chosen"].is_null())
            throw MalformedSpec("ladder report has no chosen fit");
        const std::size_t idx = ladder["chosen"];
        fitted = fit_result_from_json(ladder["attempts"].at(idx).at("result"));
    } else {
        fitted = fit_result_from_json(j);  // bare FitResult
    }

    const auto dist = build_distribution(ingest_trades_file(a.trades_csv), a.tick);
    const auto profile = compute_profile(dist, fitted);
    const auto check = check_eigenvalue_identity(dist, profile.omega);

    std::ostringstream os;
    os << "# schema_version=" << kSchemaVersion << "\n";
    write_profile_csv(profile, os);
    if (!a.out.empty()) {
        write_text_file(a.out, os.str());
        man.outputs.push_back(a.out);
    } else {
        std::cout << os.str();
    }
    std::cout.precision(10);
    std::cout << "a_estimate=" << check.a_estimate << "  dispersion=" << check.dispersion
              << "  max_deviation=" << check.max_deviation << "\n";
    emit_manifest(man);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"volume-at-price wave-model toolkit"};
    app.require_subcommand(1);

    FitArgs fa;
    auto* fit_cmd = app.add_subcommand("fit", "fit a distribution built from a trade CSV");
    fit_cmd->add_option("input", fa.input, "trade CSV")->required();
    fit_cmd->add_option("--tick", fa.tick, "price grid step");
    fit_cmd->add_option("--family", fa.family, "bessel|superposition|kummer (default: ladder)");
    fit_cmd->add_option("--confidence", fa.confidence, "significance confidence level");
    fit_cmd->add_option("--kummer-order", fa.kummer_order, "polynomial order m");
    fit_cmd->add_flag("--tie", fa.tie, "tie superposition to one eigenvalue");
    fit_cmd->add_option("--out", fa.out, "fit report JSON path");
    fit_cmd->add_option("--plot-out", fa.plot_out, "plot-data CSV path");

    BatchArgs ba;
    auto* batch_cmd = app.add_subcommand("batch", "ladder-fit many trade CSVs");
    batch_cmd->add_option("paths", ba.paths, "CSV files or directories")->required();
    batch_cmd->add_option("--tick", ba.tick, "price grid step");
    batch_cmd->add_option("--confidence", ba.confidence, "significance confidence level");
    batch_cmd->add_option("--jobs", ba.jobs, "worker threads (default: processors)");
    batch_cmd->add_option("--out", ba.out, "batch CSV path (default: stdout)");

    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic trade CSV");
    synth_cmd->add_option("--family", sa.family, "bessel|superposition|kummer");
    synth_cmd->add_option("--omega", sa.omega, "eigen-frequency");
    synth_cmd->add_option("--omega2", sa.omega2, "second eigen-frequency (superposition)");
    synth_cmd->add_option("--p0", sa.p0, "equilibrium price");
    synth_cmd->add_option("--p02", sa.p02, "second center (superposition)");
    synth_cmd->add_option("--eigen-a", sa.eigen_a, "eigenvalue A (kummer)");
    synth_cmd->add_option("--kummer-order", sa.kummer_order, "polynomial order m");
    synth_cmd->add_option("--lo", sa.lo, "price range low");
    synth_cmd->add_option("--hi", sa.hi, "price range high");
    synth_cmd->add_option("--tick", sa.tick, "price grid step");
    synth_cmd->add_option("--volume", sa.volume, "total shares");
    synth_cmd->add_option("--trades", sa.trades, "trade count");
    synth_cmd->add_option("--noise", sa.noise, "multiplicative noise sigma");
    synth_cmd->add_option("--seed", sa.seed, "RNG seed");
    synth_cmd->add_option("--second-center", sa.second_center, "two-equilibrium second center");
    synth_cmd->add_option("--mix", sa.mix, "volume fraction at the first center");
    synth_cmd->add_option("--out", sa.out, "trade CSV path (default: stdout)");

    OracleArgs oa;
    auto* oracle_cmd = app.add_subcommand("oracle", "verify closed forms against the ODEs");
    oracle_cmd->add_option("--mode", oa.mode, "bessel|kummer");
    oracle_cmd->add_option("--omega", oa.omega, "eigen-frequency (bessel)");
    oracle_cmd->add_option("--m", oa.m, "polynomial order (kummer)");
    oracle_cmd->add_option("--E", oa.e, "energy parameter (kummer)");
    oracle_cmd->add_option("--sqrt-a", oa.sqrt_a, "off-ladder sqrt(A) (negative control)");
    oracle_cmd->add_option("--step", oa.h, "finite-difference step");
    oracle_cmd->add_flag("--search", oa.search, "shooting eigenvalue search");
    oracle_cmd->add_option("--out", oa.out, "residual report JSON path");

    DynArgs da;
    auto* dyn_cmd = app.add_subcommand("dynamics", "per-level transaction-dynamics profile");
    dyn_cmd->add_option("--in", da.fit_json, "fit report JSON")->required();
    dyn_cmd->add_option("--trades", da.trades_csv, "trade CSV")->required();
    dyn_cmd->add_option("--tick", da.tick, "price grid step");
    dyn_cmd->add_option("--out", da.out, "profile CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(fa);
        if (batch_cmd->parsed()) return cmd_batch(ba);
        if (synth_cmd->parsed()) return cmd_synth(sa);
        if (oracle_cmd->parsed()) return cmd_oracle(oa);
        if (dyn_cmd->parsed()) return cmd_dynamics(da);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}
