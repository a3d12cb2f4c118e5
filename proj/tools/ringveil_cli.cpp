// Command-line harness: key generation, simulation runs, experiment
// sweeps, owner-side verification, and the channel observer.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ringveil/bench.hpp"
#include "ringveil/config.hpp"
#include "ringveil/netsim.hpp"
#include "ringveil/observer.hpp"
#include "ringveil/wallclock.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_protocol_failure = 1;
constexpr int exit_usage = 2;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ringveil::ConfigError("cannot write " + path.string());
    os << content;
    if (!os) throw ringveil::ConfigError("write failed for " + path.string());
}

json read_json_file(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ringveil::ConfigError("cannot read " + path.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw ringveil::ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

std::string hex(ringveil::ByteView v) { return ringveil::to_hex(v); }

int cmd_keygen(std::uint64_t seed, const fs::path& out_dir, unsigned devices) {
    fs::create_directories(out_dir);
    auto entity_file = [&](const std::string& id) {
        const ringveil::crypto::SignKeyPair sign =
            ringveil::crypto::sign_keypair_from_seed(ringveil::crypto::derive_seed(seed, "sign:" + id));
        const ringveil::crypto::BoxKeyPair box =
            ringveil::crypto::box_keypair_from_seed(ringveil::crypto::derive_seed(seed, "box:" + id));
        json j{{"id", id},
               {"sign_pk", hex(sign.pk)},
               {"sign_sk", hex(sign.sk)},
               {"box_pk", hex(box.pk)},
               {"box_sk", hex(box.sk)}};
        write_file(out_dir / (id + ".json"), j.dump(2) + "\n");
    };
    entity_file("owner");
    entity_file("hub");
    for (unsigned i = 1; i <= devices; ++i) entity_file("D" + std::to_string(i));
    std::cout << "wrote " << (devices + 2) << " key files to " << out_dir.string() << "\n";
    return exit_ok;
}

int cmd_run(const fs::path& config_path, const fs::path& out_dir, std::uint64_t seed_override,
            bool seed_given, bool wall_clock, std::uint64_t wall_rounds) {
    ringveil::netsim::SimConfig cfg =
        ringveil::netsim::sim_config_from_json(read_json_file(config_path));
    if (seed_given) cfg.seed = seed_override;

    ringveil::netsim::SimResult result;
    if (wall_clock) {
        ringveil::wallclock::WallClockOptions opt;
        opt.rounds = wall_rounds;
        result = ringveil::wallclock::run(cfg, opt);
    } else {
        result = ringveil::netsim::run(cfg);
    }

    fs::create_directories(out_dir);
    {
        std::ofstream os(out_dir / "events.csv", std::ios::binary);
        if (!os) throw ringveil::ConfigError("cannot write events.csv");
        ringveil::write_events_csv(os, result.events);
    }
    {
        std::ofstream os(out_dir / "rounds.csv", std::ios::binary);
        if (!os) throw ringveil::ConfigError("cannot write rounds.csv");
        ringveil::write_rounds_csv(os, result.rounds);
    }
    write_file(out_dir / "summary.json", ringveil::netsim::summary_to_json(result).dump(2) + "\n");
    // Owner-side secret material, needed later for delay verification.
    write_file(out_dir / "owner_params.json",
               ringveil::netsim::owner_params_to_json(result.owner_params).dump(2) + "\n");

    std::uint64_t rounds = 0;
    for (const auto& [id, s] : result.ring_summaries) rounds += s.rounds;
    std::cout << "simulated " << rounds << " rounds, " << result.events.size()
              << " channel events; outputs in " << out_dir.string() << "\n";
    if (result.stalled) std::cout << "warning: a ring stalled (see summary.json)\n";
    return exit_ok;
}

int cmd_verify(const fs::path& config_path, const fs::path& run_dir) {
    const auto cfg = ringveil::netsim::sim_config_from_json(read_json_file(config_path));
    if (!fs::exists(run_dir / "summary.json") || !fs::exists(run_dir / "owner_params.json"))
        throw ringveil::ConfigError("run artifacts missing in " + run_dir.string());
    const auto params = ringveil::netsim::owner_params_from_json(read_json_file(run_dir / "owner_params.json"));
    const auto log = ringveil::netsim::executions_from_json(read_json_file(run_dir / "summary.json"));

    bool all_ok = true;
    for (const auto& dispatch : cfg.schedules) {
        const bool ok = ringveil::netsim::verify_run(params, dispatch.sched, log);
        std::cout << "schedule on ring " << dispatch.ring_id << ": "
                  << (ok ? "verified" : "REJECTED") << "\n";
        all_ok = all_ok && ok;
    }
    if (cfg.schedules.empty()) std::cout << "no schedules to verify\n";
    return all_ok ? exit_ok : exit_protocol_failure;
}

int cmd_observe(const fs::path& trace_a, const fs::path& trace_b, const fs::path& out_path,
                double ks_threshold, std::optional<std::uint64_t> rounds_a,
                std::optional<std::uint64_t> rounds_b) {
    auto load = [](const fs::path& p) {
        std::ifstream is(p);
        if (!is) throw ringveil::ConfigError("cannot read " + p.string());
        return ringveil::read_events_csv(is);
    };
    const auto events_a = load(trace_a);
    const auto events_b = load(trace_b);
    const auto report =
        ringveil::observer::indistinguishability_test(events_a, events_b, ks_threshold, rounds_a, rounds_b);
    const json j = ringveil::observer::report_to_json(report);
    std::cout << j.dump(2) << "\n";
    if (!out_path.empty()) write_file(out_path, j.dump(2) + "\n");
    return report.pass() ? exit_ok : exit_protocol_failure;
}

int cmd_bench(const std::string& experiment, std::uint64_t seed, std::uint64_t rounds,
              const fs::path& out_dir) {
    std::string csv;
    if (experiment == "latency") {
        ringveil::netsim::LatencyModel latency;
        latency.alpha_us = 3300;
        std::vector<std::uint32_t> ns;
        for (std::uint32_t n = 3; n <= 75; n += 12) ns.push_back(n);
        csv = ringveil::bench::sweep_csv(ringveil::bench::latency_sweep(ns, rounds, latency, seed));
    } else if (experiment == "token_length") {
        csv = ringveil::bench::sweep_csv(
            ringveil::bench::token_length_sweep({3, 27, 51, 63, 75}, seed));
    } else if (experiment == "parallel_rings") {
        ringveil::netsim::LatencyModel latency;
        latency.alpha_us = 3300;
        csv = ringveil::bench::parallel_csv(
            ringveil::bench::parallel_rings_sweep(75, {1, 2, 3}, rounds, latency, seed));
    } else if (experiment == "skew") {
        csv = ringveil::bench::skew_csv(ringveil::bench::skew_experiment(40, 0.10, rounds, seed));
    } else if (experiment == "decouple") {
        const auto result = ringveil::bench::decouple_experiment(seed);
        json j{{"ring", ringveil::observer::report_to_json(result.ring_report)},
               {"star", ringveil::observer::report_to_json(result.star_report)},
               {"ring_events_active", result.ring_events_active},
               {"ring_events_idle", result.ring_events_idle},
               {"star_events_active", result.star_events_active},
               {"star_events_idle", result.star_events_idle},
               {"ring_pass", result.ring_pass()},
               {"star_leaks", result.star_leaks()}};
        std::cout << j.dump(2) << "\n";
        if (!out_dir.empty()) {
            fs::create_directories(out_dir);
            write_file(out_dir / "decouple.json", j.dump(2) + "\n");
        }
        return result.ring_pass() && result.star_leaks() ? exit_ok : exit_protocol_failure;
    } else {
        throw ringveil::ConfigError("unknown experiment: " + experiment);
    }
    std::cout << csv;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(out_dir / (experiment + ".csv"), csv);
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Privacy-preserving token-ring protocol: simulator and benchmark harness"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::string out_dir;
    std::string config_path;
    bool wall_clock = false;
    app.add_option("--seed", seed, "seed for all randomness");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--config", config_path, "configuration file");
    app.add_flag("--wall-clock", wall_clock, "real-solver, real-timer mode (small rings only)");

    auto* keygen = app.add_subcommand("keygen", "generate owner, hub and device key files");
    unsigned n_devices = 3;
    keygen->add_option("--devices", n_devices, "number of device key pairs");

    auto* run = app.add_subcommand("run", "run a simulation from a config file");
    std::uint64_t wall_rounds = 5;
    run->add_option("--rounds", wall_rounds, "rounds in wall-clock mode");

    auto* bench_cmd = app.add_subcommand("bench", "run a named experiment sweep");
    std::string experiment = "latency";
    std::uint64_t bench_rounds = 10;
    bench_cmd->add_option("--experiment", experiment,
                          "latency | token_length | parallel_rings | skew | decouple");
    bench_cmd->add_option("--rounds", bench_rounds, "rounds per sweep point");

    auto* verify = app.add_subcommand("verify", "verify delays and order of an execution log");
    std::string run_dir;
    verify->add_option("--run", run_dir, "directory with run outputs")->required();

    auto* observe = app.add_subcommand("observe", "compare two channel traces");
    std::string trace_a, trace_b, report_path;
    double ks_threshold = 0.1;
    std::uint64_t rounds_a = 0, rounds_b = 0;
    observe->add_option("trace_a", trace_a, "first events.csv")->required();
    observe->add_option("trace_b", trace_b, "second events.csv")->required();
    observe->add_option("--report", report_path, "write the JSON report here");
    observe->add_option("--ks-threshold", ks_threshold, "inter-arrival KS threshold");
    observe->add_option("--rounds-a", rounds_a, "round count of trace A, if known");
    observe->add_option("--rounds-b", rounds_b, "round count of trace B, if known");

    // global flags may follow the subcommand name
    for (CLI::App* sub : {keygen, run, bench_cmd, verify, observe}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*keygen) {
            if (out_dir.empty()) out_dir = "keys";
            return cmd_keygen(seed, out_dir, n_devices);
        }
        if (*run) {
            if (config_path.empty()) throw ringveil::ConfigError("run needs --config");
            if (out_dir.empty()) out_dir = "run-out";
            const bool seed_given = app.count("--seed") > 0;
            return cmd_run(config_path, out_dir, seed, seed_given, wall_clock, wall_rounds);
        }
        if (*bench_cmd) {
            return cmd_bench(experiment, seed, bench_rounds, out_dir);
        }
        if (*verify) {
            if (config_path.empty()) throw ringveil::ConfigError("verify needs --config");
            return cmd_verify(config_path, run_dir);
        }
        if (*observe) {
            return cmd_observe(trace_a, trace_b, report_path, ks_threshold,
                               observe->count("--rounds-a") ? std::optional(rounds_a) : std::nullopt,
                               observe->count("--rounds-b") ? std::optional(rounds_b) : std::nullopt);
        }
    } catch (const ringveil::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ringveil::ComparisonError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ringveil::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_protocol_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    return exit_usage;
}
