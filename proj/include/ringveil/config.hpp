#ifndef RINGVEIL_CONFIG_HPP
#define RINGVEIL_CONFIG_HPP

#include <string>

#include <json.hpp>

#include "ringveil/netsim.hpp"

// JSON forms of the simulation config and the run summary.
namespace ringveil::netsim {

namespace detail {
inline std::uint64_t get_ms_as_us(const nlohmann::json& j, const char* ms_key, const char* us_key,
                                  std::uint64_t default_us) {
    if (j.contains(us_key)) return j[us_key].get<std::uint64_t>();
    if (j.contains(ms_key)) return j[ms_key].get<std::uint64_t>() * 1000;
    return default_us;
}
} // namespace detail

inline SimConfig sim_config_from_json(const nlohmann::json& j) {
    SimConfig cfg;
    try {
        cfg.seed = j.value("seed", std::uint64_t(0));
        cfg.duration_us = detail::get_ms_as_us(j, "duration_ms", "duration_us", cfg.duration_us);
        cfg.t_diff_us = detail::get_ms_as_us(j, "t_diff_ms", "t_diff_us", cfg.t_diff_us);
        cfg.hub_dispatch_gap_us = j.value("hub_dispatch_gap_us", cfg.hub_dispatch_gap_us);
        cfg.puzzle_bits = j.value("puzzle_bits", cfg.puzzle_bits);
        cfg.real_solve = j.value("real_solve", false);

        if (j.contains("latency")) {
            const auto& jl = j["latency"];
            cfg.latency.alpha_us = jl.value("alpha_us", cfg.latency.alpha_us);
            cfg.latency.beta_us_per_byte = jl.value("beta_us_per_byte", cfg.latency.beta_us_per_byte);
            cfg.latency.jitter_us = jl.value("jitter_us", cfg.latency.jitter_us);
        }

        if (!j.contains("rings") || !j["rings"].is_array() || j["rings"].empty())
            throw ConfigError("config: missing non-empty \"rings\" array");
        for (const auto& jr : j["rings"]) {
            RingConfig ring;
            ring.ring_id = jr.value("ring_id", "r" + std::to_string(cfg.rings.size() + 1));
            if (!jr.contains("devices")) throw ConfigError("config: ring " + ring.ring_id + " missing \"devices\"");
            ring.devices = jr["devices"].get<std::vector<std::string>>();
            const std::string topo = jr.value("topology", "ring");
            if (topo == "ring") ring.topology = Topology::ring;
            else if (topo == "flower") ring.topology = Topology::flower;
            else throw ConfigError("config: ring " + ring.ring_id + " topology must be \"ring\" or \"flower\"");
            ring.token_period_us = detail::get_ms_as_us(jr, "token_period_ms", "token_period_us",
                                                        ring.token_period_us);
            const std::string mode = jr.value("period_mode", "fixed");
            if (mode == "fixed") ring.period_mode = PeriodMode::fixed;
            else if (mode == "random") ring.period_mode = PeriodMode::random_uniform;
            else throw ConfigError("config: period_mode must be \"fixed\" or \"random\"");
            ring.command_capacity = jr.value("command_capacity", ring.command_capacity);
            ring.data_capacity = jr.value("data_capacity", std::uint32_t(0));
            ring.simulated_devices = jr.value("simulated_devices", std::uint32_t(0));
            ring.active = jr.value("active", true);
            cfg.rings.push_back(std::move(ring));
        }

        if (j.contains("devices")) {
            for (const auto& [id, jd] : j["devices"].items()) {
                DeviceSpec spec;
                spec.id = id;
                spec.solver_rate = jd.value("solver_rate", spec.solver_rate);
                spec.clock_offset_us = jd.value("clock_offset_us", std::int64_t(0));
                spec.dwell_us = jd.value("dwell_us", std::uint64_t(0));
                const std::string kind = jd.value("kind", "non_skew");
                if (kind == "skew") {
                    spec.kind = DeviceKind::skew;
                    spec.upload_subfield_bytes = skew_subfield_bytes;
                } else if (kind != "non_skew") {
                    throw ConfigError("config: device " + id + " kind must be \"skew\" or \"non_skew\"");
                }
                spec.upload_subfield_bytes = jd.value("upload_subfield_bytes", spec.upload_subfield_bytes);
                if (jd.contains("gamma"))
                    for (const auto& dep : jd["gamma"]) spec.profile.gamma.insert(dep.get<std::string>());
                spec.profile.resources = jd.value("resources", 1.0);
                cfg.devices[id] = std::move(spec);
            }
        }

        if (j.contains("schedules")) {
            for (const auto& js : j["schedules"]) {
                ScheduleDispatch dispatch;
                dispatch.ring_id = js.value("ring", cfg.rings.front().ring_id);
                dispatch.sched = schedule::schedule_from_json(js);
                cfg.schedules.push_back(std::move(dispatch));
            }
        }

        if (j.contains("uploads")) {
            for (const auto& ju : j["uploads"]) {
                UploadRequest up;
                up.device_id = ju.at("device").get<std::string>();
                up.at_us = detail::get_ms_as_us(ju, "at_ms", "at_us", 0);
                up.payload_bytes = ju.at("bytes").get<std::uint32_t>();
                cfg.uploads.push_back(std::move(up));
            }
        }

        if (j.contains("upload_on_exec"))
            for (const auto& [id, bytes] : j["upload_on_exec"].items())
                cfg.upload_on_exec[id] = bytes.get<std::uint32_t>();

        if (j.contains("churn")) {
            for (const auto& jc : j["churn"]) {
                ChurnEvent ev;
                ev.device_id = jc.at("device").get<std::string>();
                ev.at_us = detail::get_ms_as_us(jc, "at_ms", "at_us", 0);
                const std::string kind = jc.at("event").get<std::string>();
                if (kind == "leave") ev.leave = true;
                else if (kind == "join") ev.leave = false;
                else throw ConfigError("config: churn event must be \"leave\" or \"join\"");
                cfg.churn.push_back(std::move(ev));
            }
        }

        if (j.contains("workload")) {
            const auto& jw = j["workload"];
            cfg.workload.enabled = true;
            cfg.workload.max_commands_per_round = jw.value("max_commands_per_round", std::uint32_t(0));
            cfg.workload.max_uploads_per_round = jw.value("max_uploads_per_round", std::uint32_t(0));
            cfg.workload.max_upload_bytes = jw.value("max_upload_bytes", std::uint32_t(256));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline nlohmann::json summary_to_json(const SimResult& result) {
    nlohmann::json rings = nlohmann::json::array();
    for (const auto& [id, s] : result.ring_summaries) {
        rings.push_back({{"ring_id", s.ring_id},
                         {"rounds", s.rounds},
                         {"mean_latency_ms", s.mean_latency_us / 1000.0},
                         {"var_latency_ms2", s.var_latency_us / 1e6},
                         {"sealed_length", s.sealed_length},
                         {"constant_sealed_length", s.constant_sealed_length},
                         {"stalled", s.stalled},
                         {"stalled_round", s.stalled_round}});
    }
    nlohmann::json executions = nlohmann::json::array();
    for (const auto& e : result.executions)
        executions.push_back({{"device", e.device_id},
                              {"t_com_us", e.t_com_us},
                              {"t_hat", e.t_hat},
                              {"solve_value_hex", e.solve_value_hex},
                              {"squarings", e.squarings}});
    nlohmann::json uploads = nlohmann::json::array();
    for (const auto& u : result.uploads_recovered)
        uploads.push_back({{"device", u.device_id},
                           {"round", u.round_id},
                           {"recovered_at_us", u.recovered_at_us},
                           {"payload_bytes", u.payload_bytes},
                           {"payload_sha256", u.payload_sha256_hex}});
    return nlohmann::json{{"rings", std::move(rings)},
                          {"executions", std::move(executions)},
                          {"uploads", std::move(uploads)},
                          {"stalled", result.stalled}};
}

// Execution log round trip, so a verify pass can run on stored outputs.
inline std::vector<ExecutionRecord> executions_from_json(const nlohmann::json& j) {
    std::vector<ExecutionRecord> log;
    for (const auto& je : j.at("executions")) {
        ExecutionRecord rec;
        rec.device_id = je.at("device").get<std::string>();
        rec.t_com_us = je.at("t_com_us").get<std::uint64_t>();
        rec.t_hat = je.at("t_hat").get<std::uint64_t>();
        rec.solve_value_hex = je.at("solve_value_hex").get<std::string>();
        rec.squarings = je.at("squarings").get<std::uint64_t>();
        log.push_back(std::move(rec));
    }
    return log;
}

// Owner-side parameter file: the one place p, q and phi(n) are persisted,
// and it never travels in a token or puzzle.
inline nlohmann::json owner_params_to_json(const timelock::PuzzleParams& params) {
    return nlohmann::json{{"p", params.p.get_str(16)},
                          {"q", params.q.get_str(16)},
                          {"n", params.n.get_str(16)},
                          {"a", params.a.get_str(16)},
                          {"phi_n", params.phi_n.get_str(16)}};
}

inline timelock::PuzzleParams owner_params_from_json(const nlohmann::json& j) {
    timelock::PuzzleParams params;
    params.p = Bigint(j.at("p").get<std::string>(), 16);
    params.q = Bigint(j.at("q").get<std::string>(), 16);
    params.n = Bigint(j.at("n").get<std::string>(), 16);
    params.a = Bigint(j.at("a").get<std::string>(), 16);
    params.phi_n = Bigint(j.at("phi_n").get<std::string>(), 16);
    return params;
}

} // namespace ringveil::netsim

#endif
