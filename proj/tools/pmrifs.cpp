// pmrifs: posterior-matching simulator with a reversed-iterated-function-
// system decoder. One subcommand per experiment class:
//
//   simulate   run seeded trials, write transcripts/results and a summary CSV
//   lcurve     window-contraction means over a dyadic width grid, as CSV
//   verify     named statistical/exactness suites, JSON report
//   hlcheck    stretch-tail bound for the standard map battery
//   info       channel facts: information rate, kernel shape, budgets
//
// Exit codes: 0 success, 1 suite or bound failure, 2 configuration error,
// 3 precision exhaustion, 4 internal error.
//
// PMRIFS_OUT_DIR overrides the output directory, PMRIFS_WORKERS the worker
// count; explicit seeds make every output byte-reproducible.

#include "pm/analysis.hpp"
#include "pm/channel.hpp"
#include "pm/codec.hpp"
#include "pm/kernel.hpp"
#include "pm/stats.hpp"
#include "pm/verify.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <thread>

namespace {

using nlohmann::ordered_json;

struct CommonOpts {
    std::string channel_path;
    std::uint64_t seed = 0;
    bool seeded = false;
    bool ci = false;
    long precision = 0;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts* o, bool needs_out) {
    cmd->add_option("--channel", o->channel_path, "channel spec JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", o->seed, "base seed; message/channel/common streams use seed, seed+1, seed+2")
        ->each([o](const std::string&) { o->seeded = true; });
    cmd->add_flag("--ci", o->ci, "fail fast on any entropy-seeded run");
    cmd->add_option("--precision", o->precision, "working precision override, bits")
        ->check(CLI::PositiveNumber);
    if (needs_out) cmd->add_option("--out", o->out_dir, "output directory");
}

// Entropy seeding is a convenience for desk runs only; CI must pin seeds.
pm::Seeds resolve_seeds(CommonOpts& o) {
    if (!o.seeded) {
        if (o.ci) throw pm::config_error("--ci requires an explicit --seed");
        std::random_device rd;
        o.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        std::cerr << "seed: " << o.seed << " (entropy; pass --seed to reproduce)\n";
    }
    return pm::Seeds{o.seed, o.seed + 1, o.seed + 2};
}

std::string resolve_out_dir(const CommonOpts& o, const char* fallback) {
    if (const char* env = std::getenv("PMRIFS_OUT_DIR"); env && *env) return env;
    if (!o.out_dir.empty()) return o.out_dir;
    return fallback;  // empty: no file output wanted
}

long resolve_workers(long flag_value) {
    if (const char* env = std::getenv("PMRIFS_WORKERS"); env && *env) {
        char* end = nullptr;
        long w = std::strtol(env, &end, 10);
        if (end && *end == '\0' && w >= 1) return w;
        throw pm::config_error("PMRIFS_WORKERS must be a positive integer");
    }
    return flag_value >= 1 ? flag_value : 1;
}

pm::Rational parse_probability(const std::string& text, const char* field) {
    pm::Rational p = pm::rational_from_decimal(text);
    if (!(p > 0 && p < 1))
        throw pm::config_error(std::string(field) + " must be in (0,1), got " + text);
    return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw pm::config_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw pm::config_error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// simulate

struct SimOpts {
    CommonOpts common;
    long n = 64;
    std::string pe_text = "0.1";
    long trials = 100;
    std::string j0_start_text;
    bool no_transcripts = false;
    bool no_results = false;
    long workers = 1;
};

template <class K>
int simulate_with(const pm::ChannelSpec& ch, const K& k, const SimOpts& o, const pm::Seeds& seeds,
                  const pm::Rational& p_e, const std::filesystem::path& dir) {
    using S = typename K::Scalar;
    bool custom_j0 = !o.j0_start_text.empty();
    pm::Rational j0_start;
    if (custom_j0) {
        j0_start = pm::rational_from_decimal(o.j0_start_text);
        if (!(j0_start >= 0 && j0_start < 1))
            throw pm::config_error("j0-start must be in [0,1), got " + o.j0_start_text);
    }

    std::vector<double> rates(static_cast<std::size_t>(o.trials));
    std::vector<char> errors(static_cast<std::size_t>(o.trials));
    long workers = std::min<long>(resolve_workers(o.workers), o.trials);
    std::atomic<long> next{0}, done{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mu;

    auto work = [&] {
        try {
            for (;;) {
                long t = next.fetch_add(1);
                if (t >= o.trials || failed.load()) break;
                pm::TrialConfig cfg;
                cfg.n = o.n;
                cfg.target_error = p_e;
                cfg.precision_bits = o.common.precision;
                cfg.seeds = seeds;
                cfg.trial_index = t;
                auto out = pm::run_trial(ch, k, cfg);
                if (custom_j0) {
                    out.decode = pm::rifs_decode(k, out.transcript, p_e, &j0_start);
                    out.error = !out.decode.interval.contains(
                        pm::scalar_from_dyadic<S>(out.theta0));
                    pm::CircleInterval<S> j0{pm::scalar_from_rational<S>(j0_start),
                                             pm::scalar_from_rational<S>(1 - p_e)};
                    out.final_in_j0 = j0.contains(out.theta_final);
                }
                rates[static_cast<std::size_t>(t)] = out.decode.rate;
                errors[static_cast<std::size_t>(t)] = out.error ? 1 : 0;

                char name[32];
                std::snprintf(name, sizeof name, "trial_%06ld", t);
                if (!o.no_transcripts)
                    out.transcript.save((dir / (std::string(name) + ".transcript.jsonl")).string());
                if (!o.no_results) {
                    ordered_json j = pm::decode_result_to_json(out.decode);
                    j["channel_hash"] = out.transcript.channel_hash;
                    j["n"] = o.n;
                    j["precision_bits"] = out.transcript.precision_bits;
                    j["seeds"] = {{"message", seeds.message},
                                  {"channel", seeds.channel},
                                  {"common", seeds.common}};
                    j["trial_index"] = t;
                    j["error"] = out.error;
                    j["final_in_target_arc"] = out.final_in_j0;
                    write_text(dir / (std::string(name) + ".result.json"), j.dump(2) + "\n");
                }
                done.fetch_add(1);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!first_error) first_error = std::current_exception();
            failed.store(true);
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (long w = 0; w < workers; ++w) pool.emplace_back(work);
    if (o.trials >= 2000) {
        while (done.load() < o.trials && !failed.load()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(500));
            std::cerr << "\r" << done.load() << "/" << o.trials << " trials" << std::flush;
        }
        std::cerr << "\n";
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    long err_count = 0;
    for (char e : errors) err_count += e;
    double frac = static_cast<double>(err_count) / static_cast<double>(o.trials);
    double pe_d = pm::to_double(p_e);
    double frac_se = std::sqrt(pe_d * (1 - pe_d) / static_cast<double>(o.trials));
    pm::MeanStderr rate_ms = pm::mean_stderr(rates);

    std::vector<pm::CsvRow> rows;
    rows.push_back({"rate", ch.hash(), o.n, 0, rate_ms.mean, rate_ms.se, 1, true});
    rows.push_back({"error-rate", ch.hash(), o.n, 0, frac, frac_se, 1,
                    std::fabs(frac - pe_d) <= 3 * frac_se});
    pm::write_csv((dir / "summary.csv").string(), rows);

    std::cout << "trials: " << o.trials << "\n"
              << "error rate: " << frac << " (target " << pm::rational_to_string(p_e) << ")\n"
              << "mean rate: " << rate_ms.mean << " +- " << rate_ms.se << " bits/use\n"
              << "information rate: " << ch.mutual_information() << " bits/use\n"
              << "output: " << dir.string() << "\n";
    return 0;
}

int cmd_simulate(SimOpts& o) {
    pm::ChannelSpec ch = pm::ChannelSpec::load(o.common.channel_path);
    if (o.n < 1) throw pm::config_error("n must be at least 1");
    if (o.trials < 1) throw pm::config_error("trials must be at least 1");
    pm::Rational p_e = parse_probability(o.pe_text, "pe");
    pm::Seeds seeds = resolve_seeds(o.common);
    std::filesystem::path dir = resolve_out_dir(o.common, "pmrifs-out");
    std::filesystem::create_directories(dir);
    if (ch.kind == pm::ChannelKind::dmc)
        return simulate_with(ch, pm::build_dmc_kernel(ch), o, seeds, p_e, dir);
    long budget = o.common.precision > 0 ? o.common.precision
                                         : pm::default_precision_budget(ch, o.n);
    return simulate_with(ch, pm::build_awgn_kernel(ch, budget), o, seeds, p_e, dir);
}

// ---------------------------------------------------------------------------
// lcurve

struct LcurveOpts {
    CommonOpts common;
    int grid_resolution = 0;  // 0: geometric default or explicit --lambda list
    std::vector<double> lambdas;
    long samples = 20000;
    double delta = 1;
};

int cmd_lcurve(LcurveOpts& o) {
    pm::ChannelSpec ch = pm::ChannelSpec::load(o.common.channel_path);
    if (o.samples < 2) throw pm::config_error("samples must be at least 2");
    pm::Seeds seeds = resolve_seeds(o.common);

    std::vector<double> grid;
    if (o.grid_resolution > 0) {
        if (!o.lambdas.empty())
            throw pm::config_error("give either --grid-resolution or --lambda, not both");
        if (o.grid_resolution > 30) throw pm::config_error("grid-resolution above 30 is not useful");
        double step = std::ldexp(1.0, -o.grid_resolution);
        for (long j = 1; j < (1L << o.grid_resolution); ++j)
            grid.push_back(static_cast<double>(j) * step);
    } else if (!o.lambdas.empty()) {
        grid = o.lambdas;
    } else {
        for (int k = 1; k <= 20; ++k) grid.push_back(std::ldexp(1.0, -k));
    }

    pm::RandomStream rng = pm::RandomStream::from_seed(seeds.common);
    pm::LambdaCurve curve = pm::lambda_curve(ch, grid, o.samples, rng, o.delta);

    std::vector<pm::CsvRow> rows;
    for (const auto& p : curve.points) {
        bool bracketed = p.mean > -3 * p.se && p.mean < curve.mutual_information + 3 * p.se;
        rows.push_back({"lcurve", ch.hash(), o.samples, p.lambda, p.mean, p.se, 1, bracketed});
    }
    std::string csv = pm::csv_to_string(rows);
    std::cout << csv;
    std::string dir = resolve_out_dir(o.common, "");
    if (!dir.empty()) {
        std::filesystem::create_directories(dir);
        write_text(std::filesystem::path(dir) / "lcurve.csv", csv);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyCmdOpts {
    CommonOpts common;
    std::vector<std::string> suites;
    bool quick = false;
    long trials = 0;
    long samples = 0;
    long n = 0;
    std::string pe_text = "0.1";
};

int cmd_verify(VerifyCmdOpts& o) {
    pm::ChannelSpec ch = pm::ChannelSpec::load(o.common.channel_path);
    pm::VerifyOptions vo;
    vo.trials = o.trials;
    vo.samples = o.samples;
    vo.n = o.n;
    vo.target_error = parse_probability(o.pe_text, "pe");
    vo.seeds = resolve_seeds(o.common);
    vo.quick = o.quick;

    std::vector<std::string> suites = o.suites.empty() ? pm::verify_suite_names() : o.suites;
    ordered_json report;
    report["schema"] = 1;
    report["type"] = "verify_report_set";
    report["channel_hash"] = ch.hash();
    report["suites"] = ordered_json::array();
    bool all_pass = true;
    for (const std::string& name : suites) {
        pm::SuiteReport rep = pm::run_verify_suite(name, ch, vo);
        std::cerr << "suite " << name << ": " << (rep.pass ? "pass" : "FAIL") << "\n";
        report["suites"].push_back(pm::suite_report_to_json(rep));
        all_pass = all_pass && rep.pass;
    }
    report["pass"] = all_pass;
    std::cout << report.dump(2) << "\n";
    std::string dir = resolve_out_dir(o.common, "");
    if (!dir.empty()) {
        std::filesystem::create_directories(dir);
        write_text(std::filesystem::path(dir) / "verify_report.json", report.dump(2) + "\n");
    }
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// hlcheck

struct HlOpts {
    CommonOpts common;
    long samples = 20000;
    std::vector<double> a_list{2, 4, 8, 16};
};

int cmd_hlcheck(HlOpts& o) {
    pm::ChannelSpec ch = pm::ChannelSpec::load(o.common.channel_path);
    if (o.samples < 2) throw pm::config_error("samples must be at least 2");
    pm::Seeds seeds = resolve_seeds(o.common);
    pm::RandomStream rng = pm::RandomStream::from_seed(seeds.common);
    std::vector<double> grid = pm::default_lambda_grid();

    bool all_pass = true;
    std::uint64_t tag = 0;
    std::printf("%-24s %6s %10s %10s %10s  %s\n", "map", "a", "Pr(max>a)", "se", "9/a E|g'|",
                "pass");
    for (const pm::StretchMapCase& mc : pm::standard_stretch_maps(ch)) {
        pm::HlReport rep =
            pm::hl_tail_test(mc.map, mc.e_abs_deriv, o.a_list, o.samples, grid, rng.substream(tag++));
        for (const auto& row : rep.rows) {
            std::printf("%-24s %6g %10.5f %10.5f %10.5f  %s\n", rep.map_name.c_str(), row.a,
                        row.lhs, row.lhs_se, row.rhs, row.pass ? "yes" : "NO");
            all_pass = all_pass && row.pass;
        }
        if (mc.lipschitz > 0) {
            for (const auto& row : rep.rows)
                if (row.a >= mc.lipschitz * (1 - 1e-12) && row.lhs > 0) {
                    std::printf("%-24s tail above Lipschitz constant %g is nonzero\n",
                                rep.map_name.c_str(), mc.lipschitz);
                    all_pass = false;
                }
        }
    }
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// info

struct InfoOpts {
    CommonOpts common;
    bool as_json = false;
};

int cmd_info(InfoOpts& o) {
    pm::ChannelSpec ch = pm::ChannelSpec::load(o.common.channel_path);
    bool dmc = ch.kind == pm::ChannelKind::dmc;
    ordered_json j;
    j["schema"] = 1;
    j["type"] = "channel_info";
    j["kind"] = dmc ? "dmc" : "awgn";
    j["channel_hash"] = ch.hash();
    j["mutual_information_bits"] = ch.mutual_information();
    j["default_precision_budget"] = {{"n64", pm::default_precision_budget(ch, 64)},
                                     {"n256", pm::default_precision_budget(ch, 256)}};
    if (dmc) {
        pm::DmcKernel k = pm::build_dmc_kernel(ch);
        j["inputs"] = ch.num_inputs();
        j["outputs"] = ch.num_outputs();
        ordered_json pmf = ordered_json::array();
        for (const auto& p : ch.output_pmf()) pmf.push_back(pm::rational_to_string(p));
        j["output_pmf"] = pmf;
        ordered_json brk = ordered_json::array();
        for (const auto& b : k.breaks) brk.push_back(pm::rational_to_string(b));
        j["breaks"] = brk;
        ordered_json segs = ordered_json::array();
        for (std::size_t y = 0; y < k.num_outputs(); ++y) {
            ordered_json row;
            row["y"] = y;
            row["reachable"] = static_cast<bool>(k.reachable[y]);
            ordered_json sl = ordered_json::array();
            for (std::size_t i = 0; i < k.num_inputs(); ++i)
                sl.push_back(pm::rational_to_string(k.slope[y][i]));
            row["slopes"] = sl;
            segs.push_back(row);
        }
        j["segments"] = segs;
        pm::P1Report p1 = pm::validate_p1(k);
        j["strictly_monotone"] = p1.holds;
        j["notes"] = p1.notes;
    } else {
        pm::AwgnKernel k = pm::build_awgn_kernel(ch, 128);
        j["power"] = pm::rational_to_string(ch.power);
        j["noise"] = pm::rational_to_string(ch.noise);
        j["posterior_coefficient"] = k.coef_a_d;
        j["posterior_sigma"] = k.sigma_d;
        pm::P1Report p1 = pm::validate_p1(k, {-2, -1, 0, 1, 2});
        j["strictly_monotone"] = p1.holds;
        j["notes"] = p1.notes;
    }
    if (o.as_json) {
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "kind: " << j["kind"].get<std::string>() << "\n"
              << "hash: " << j["channel_hash"].get<std::string>() << "\n"
              << "information rate: " << j["mutual_information_bits"].get<double>()
              << " bits/use\n"
              << "default budget: n=64 -> " << j["default_precision_budget"]["n64"].get<long>()
              << " bits, n=256 -> " << j["default_precision_budget"]["n256"].get<long>()
              << " bits\n";
    if (dmc) {
        std::cout << "inputs: " << ch.num_inputs() << ", outputs: " << ch.num_outputs() << "\n";
        std::cout << "breaks:";
        for (const auto& b : j["breaks"]) std::cout << " " << b.get<std::string>();
        std::cout << "\nkernel slopes per output (y: slope on each input segment):\n";
        for (const auto& row : j["segments"]) {
            std::cout << "  y=" << row["y"].get<std::size_t>() << ":";
            for (const auto& s : row["slopes"]) std::cout << " " << s.get<std::string>();
            if (!row["reachable"].get<bool>()) std::cout << "  (unreachable)";
            std::cout << "\n";
        }
    } else {
        std::cout << "power: " << j["power"].get<std::string>()
                  << ", noise: " << j["noise"].get<std::string>() << "\n"
                  << "posterior coefficient a: " << j["posterior_coefficient"].get<double>()
                  << ", posterior sigma: " << j["posterior_sigma"].get<double>() << "\n";
    }
    std::cout << "strictly monotone kernel: "
              << (j["strictly_monotone"].get<bool>() ? "yes" : "NO") << "\n";
    for (const auto& note : j["notes"]) std::cout << "  note: " << note.get<std::string>() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"posterior-matching feedback simulator with RIFS decoding"};
    app.require_subcommand(1);

    SimOpts sim;
    CLI::App* c_sim = app.add_subcommand("simulate", "run seeded trials, write transcripts and results");
    add_common(c_sim, &sim.common, true);
    c_sim->add_option("--n", sim.n, "channel uses per trial")->check(CLI::PositiveNumber);
    c_sim->add_option("--pe", sim.pe_text, "target error probability, exact decimal");
    c_sim->add_option("--trials", sim.trials, "number of trials")->check(CLI::PositiveNumber);
    c_sim->add_option("--j0-start", sim.j0_start_text, "decoder arc start override, exact decimal");
    c_sim->add_flag("--no-transcripts", sim.no_transcripts, "skip per-trial transcript files");
    c_sim->add_flag("--no-results", sim.no_results, "skip per-trial result files");
    c_sim->add_option("--workers", sim.workers, "worker threads over trials")
        ->check(CLI::PositiveNumber);

    LcurveOpts lc;
    CLI::App* c_lc = app.add_subcommand("lcurve", "contraction means over a window-width grid");
    add_common(c_lc, &lc.common, true);
    c_lc->add_option("--grid-resolution", lc.grid_resolution,
                     "uniform dyadic grid j*2^-k, k bits")
        ->check(CLI::PositiveNumber);
    c_lc->add_option("--lambda", lc.lambdas, "explicit window widths (repeatable)");
    c_lc->add_option("--samples", lc.samples, "samples per grid point")->check(CLI::PositiveNumber);
    c_lc->add_option("--delta", lc.delta, "moment exponent offset for the reported moment column");

    VerifyCmdOpts vf;
    CLI::App* c_vf = app.add_subcommand("verify", "run named verification suites");
    add_common(c_vf, &vf.common, true);
    c_vf->add_option("--suite", vf.suites, "suite name (repeatable; default: all)");
    c_vf->add_flag("--quick", vf.quick, "smaller sample sizes, same checks");
    c_vf->add_option("--trials", vf.trials, "trial count override")->check(CLI::PositiveNumber);
    c_vf->add_option("--samples", vf.samples, "sample count override")->check(CLI::PositiveNumber);
    c_vf->add_option("--n", vf.n, "horizon override")->check(CLI::PositiveNumber);
    c_vf->add_option("--pe", vf.pe_text, "target error probability, exact decimal");

    HlOpts hl;
    CLI::App* c_hl = app.add_subcommand("hlcheck", "stretch-tail bound over the standard maps");
    add_common(c_hl, &hl.common, false);
    c_hl->add_option("--samples", hl.samples, "uniform sample points")->check(CLI::PositiveNumber);
    c_hl->add_option("--a", hl.a_list, "tail thresholds (repeatable)");

    InfoOpts info;
    CLI::App* c_info = app.add_subcommand("info", "channel and kernel facts");
    add_common(c_info, &info.common, false);
    c_info->add_flag("--json", info.as_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_sim->parsed()) return cmd_simulate(sim);
        if (c_lc->parsed()) return cmd_lcurve(lc);
        if (c_vf->parsed()) return cmd_verify(vf);
        if (c_hl->parsed()) return cmd_hlcheck(hl);
        if (c_info->parsed()) return cmd_info(info);
    } catch (const pm::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pm::precision_error& e) {
        std::cerr << "precision exhausted: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
