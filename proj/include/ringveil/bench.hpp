#ifndef RINGVEIL_BENCH_HPP
#define RINGVEIL_BENCH_HPP

#include <cstdint>
#include <cstdio>
#include <future>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ringveil/netsim.hpp"
#include "ringveil/observer.hpp"

// Reproducible experiment sweeps over the simulator. Every experiment is
// fully determined by its parameters and a seed.
namespace ringveil::bench {

inline std::string device_name(std::uint32_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "D%03u", index + 1);
    return buf;
}

inline std::vector<std::string> device_names(std::uint32_t count) {
    std::vector<std::string> names;
    names.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) names.push_back(device_name(i));
    return names;
}

// Single ring of n devices circulating back-to-back rounds.
inline netsim::SimConfig ring_sweep_config(std::uint32_t n, std::uint64_t rounds,
                                           const netsim::LatencyModel& latency, std::uint64_t seed) {
    netsim::SimConfig cfg;
    cfg.seed = seed;
    cfg.latency = latency;
    netsim::RingConfig ring = netsim::build_ring("r1", device_names(n), netsim::Topology::ring, 2048, 0);
    ring.token_period_us = 1; // re-originate as soon as the token returns
    cfg.rings.push_back(std::move(ring));
    const std::uint64_t token_bytes = 2048 + std::uint64_t(n) * netsim::non_skew_subfield_bytes + 64;
    const std::uint64_t expected_round =
        (n + 1) * (latency.alpha_us + latency.jitter_us +
                   static_cast<std::uint64_t>(latency.beta_us_per_byte * token_bytes) + 1);
    cfg.duration_us = expected_round * rounds;
    return cfg;
}

struct SweepPoint {
    std::uint32_t devices = 0;
    std::uint64_t rounds = 0;
    double mean_latency_us = 0.0;
    double var_latency_us = 0.0;
    std::uint32_t sealed_length = 0;
};

inline SweepPoint measure_ring(std::uint32_t n, std::uint64_t rounds,
                               const netsim::LatencyModel& latency, std::uint64_t seed) {
    const netsim::SimResult result = netsim::run(ring_sweep_config(n, rounds, latency, seed));
    const netsim::RingSummary& s = result.ring_summaries.at("r1");
    return SweepPoint{n, s.rounds, s.mean_latency_us, s.var_latency_us, s.sealed_length};
}

// Experiment: mean and variance of round latency as the ring grows.
inline std::vector<SweepPoint> latency_sweep(const std::vector<std::uint32_t>& device_counts,
                                             std::uint64_t rounds, const netsim::LatencyModel& latency,
                                             std::uint64_t seed) {
    std::vector<std::future<SweepPoint>> futures;
    for (const std::uint32_t n : device_counts)
        futures.push_back(std::async(std::launch::async,
                                     [=] { return measure_ring(n, rounds, latency, seed + n); }));
    std::vector<SweepPoint> points;
    for (auto& f : futures) points.push_back(f.get()); // merged in parameter order
    return points;
}

// Experiment: sealed token length as the ring grows.
inline std::vector<SweepPoint> token_length_sweep(const std::vector<std::uint32_t>& device_counts,
                                                  std::uint64_t seed) {
    netsim::LatencyModel latency;
    latency.alpha_us = 1000;
    return latency_sweep(device_counts, 3, latency, seed);
}

struct ParallelPoint {
    std::uint32_t rings = 0;
    std::uint32_t devices_per_ring = 0;
    double per_ring_mean_latency_us = 0.0;
    double speedup_vs_single = 1.0;
};

// Experiment: N devices split uniformly across parallel rings that share
// the hub; tokens are originated sequentially.
inline std::vector<ParallelPoint> parallel_rings_sweep(std::uint32_t n_devices,
                                                       const std::vector<std::uint32_t>& ring_counts,
                                                       std::uint64_t rounds,
                                                       const netsim::LatencyModel& latency,
                                                       std::uint64_t seed) {
    std::vector<ParallelPoint> points;
    double single_ring_latency = 0.0;
    for (const std::uint32_t r : ring_counts) {
        netsim::SimConfig cfg;
        cfg.seed = seed + r;
        cfg.latency = latency;
        const std::vector<std::string> names = device_names(n_devices);
        for (std::uint32_t k = 0; k < r; ++k) {
            std::vector<std::string> members;
            for (std::uint32_t i = k; i < n_devices; i += r) members.push_back(names[i]);
            netsim::RingConfig ring = netsim::build_ring("r" + std::to_string(k + 1), members,
                                                         netsim::Topology::ring, 2048, 0);
            ring.token_period_us = 1;
            cfg.rings.push_back(std::move(ring));
        }
        const std::uint64_t expected_round = (n_devices / r + 2) * (latency.alpha_us + 1);
        cfg.duration_us = expected_round * rounds;
        const netsim::SimResult result = netsim::run(cfg);
        double mean = 0.0;
        for (const auto& [id, s] : result.ring_summaries) mean += s.mean_latency_us;
        mean /= static_cast<double>(result.ring_summaries.size());
        ParallelPoint point;
        point.rings = r;
        point.devices_per_ring = n_devices / r;
        point.per_ring_mean_latency_us = mean;
        if (r == ring_counts.front() && single_ring_latency == 0.0) single_ring_latency = mean;
        point.speedup_vs_single = single_ring_latency > 0 ? single_ring_latency / mean : 1.0;
        points.push_back(point);
    }
    return points;
}

struct SkewComparison {
    std::uint32_t devices = 0;
    std::uint32_t skew_devices = 0;
    std::uint32_t mixed_sealed_length = 0;
    double mixed_mean_latency_us = 0.0;
    std::uint32_t nonskew_sealed_length = 0;
    double nonskew_mean_latency_us = 0.0;
    std::uint32_t skew_sealed_length = 0;
    double skew_mean_latency_us = 0.0;
};

// Experiment: skew devices (1 MB sub-fields) mixed into one ring with the
// non-skew majority (1 KB sub-fields), against the split-ring layout.
inline SkewComparison skew_experiment(std::uint32_t n_devices, double skew_fraction,
                                      std::uint64_t rounds, std::uint64_t seed) {
    netsim::LatencyModel latency;
    latency.alpha_us = 200;
    latency.beta_us_per_byte = 0.008; // roughly 1 Gbit/s
    const std::uint32_t n_skew =
        std::max<std::uint32_t>(1, static_cast<std::uint32_t>(n_devices * skew_fraction + 0.5));

    std::map<std::string, netsim::DeviceSpec> specs;
    const std::vector<std::string> names = device_names(n_devices);
    for (std::uint32_t i = 0; i < n_devices; ++i) {
        netsim::DeviceSpec spec;
        spec.id = names[i];
        if (i >= n_devices - n_skew) {
            spec.kind = netsim::DeviceKind::skew;
            spec.upload_subfield_bytes = netsim::skew_subfield_bytes;
        }
        specs[spec.id] = spec;
    }

    SkewComparison cmp;
    cmp.devices = n_devices;
    cmp.skew_devices = n_skew;

    netsim::SimConfig mixed_cfg;
    mixed_cfg.seed = seed;
    mixed_cfg.latency = latency;
    mixed_cfg.devices = specs;
    netsim::RingConfig mixed = netsim::build_ring("mixed", names, netsim::Topology::ring, 2048, 0);
    mixed.token_period_us = 1;
    mixed_cfg.rings.push_back(mixed);
    {
        // one probe round to size the duration for `rounds` rounds
        netsim::SimConfig probe = mixed_cfg;
        probe.duration_us = 1;
        const auto probe_result = netsim::run(probe);
        mixed_cfg.duration_us = static_cast<std::uint64_t>(
            probe_result.ring_summaries.at("mixed").mean_latency_us * (rounds + 1));
    }
    const netsim::SimResult mixed_result = netsim::run(mixed_cfg);
    cmp.mixed_sealed_length = mixed_result.ring_summaries.at("mixed").sealed_length;
    cmp.mixed_mean_latency_us = mixed_result.ring_summaries.at("mixed").mean_latency_us;

    netsim::SimConfig split_cfg;
    split_cfg.seed = seed + 1;
    split_cfg.latency = latency;
    split_cfg.devices = specs;
    for (auto& ring : netsim::partition_by_skew(specs)) {
        ring.token_period_us = 1;
        split_cfg.rings.push_back(ring);
    }
    {
        netsim::SimConfig probe = split_cfg;
        probe.duration_us = 1;
        const auto probe_result = netsim::run(probe);
        double slowest = 0.0;
        for (const auto& [id, s] : probe_result.ring_summaries)
            slowest = std::max(slowest, s.mean_latency_us);
        split_cfg.duration_us = static_cast<std::uint64_t>(slowest * (rounds + 1));
    }
    const netsim::SimResult split_result = netsim::run(split_cfg);
    cmp.nonskew_sealed_length = split_result.ring_summaries.at("nonskew").sealed_length;
    cmp.nonskew_mean_latency_us = split_result.ring_summaries.at("nonskew").mean_latency_us;
    cmp.skew_sealed_length = split_result.ring_summaries.at("skew").sealed_length;
    cmp.skew_mean_latency_us = split_result.ring_summaries.at("skew").mean_latency_us;
    return cmp;
}

// ---- decoupling experiment (ring vs star baseline) ----

struct DecoupleResult {
    observer::IndistinguishabilityReport ring_report;
    observer::IndistinguishabilityReport star_report;
    std::size_t ring_events_active = 0;
    std::size_t ring_events_idle = 0;
    std::size_t star_events_active = 0;
    std::size_t star_events_idle = 0;

    bool ring_pass() const { return ring_report.pass(); }
    bool star_leaks() const { return !star_report.pass(); }
};

// Sample workload: a Set, a Set, a Read and a Read, ten virtual seconds
// apart, on three devices.
inline std::vector<observer::StarCommand> sample_star_workload() {
    using observer::StarCommand;
    using observer::StarCommandKind;
    return {StarCommand{"D1", StarCommandKind::set, 10'000'000, 512},
            StarCommand{"D2", StarCommandKind::set, 20'000'000, 512},
            StarCommand{"D2", StarCommandKind::read, 30'000'000, 512},
            StarCommand{"D3", StarCommandKind::read, 40'000'000, 512}};
}

inline netsim::SimConfig decouple_ring_config(std::uint64_t seed, bool with_commands) {
    netsim::SimConfig cfg;
    cfg.seed = seed;
    cfg.latency.alpha_us = 1000;
    netsim::RingConfig ring = netsim::build_ring("r1", {"D1", "D2", "D3"}, netsim::Topology::ring, 2048, 0);
    ring.token_period_us = 1'000'000;
    cfg.rings.push_back(std::move(ring));
    cfg.duration_us = 60'000'000;
    if (with_commands) {
        auto dispatch = [&](const std::string& device, SwitchState state, std::uint64_t at_us) {
            schedule::Schedule s;
            s.epoch_us = at_us;
            s.chains.push_back({Command{device, state, 100'000}});
            cfg.schedules.push_back(netsim::ScheduleDispatch{"r1", std::move(s)});
        };
        // Set -> on, Read -> off followed by a data upload.
        dispatch("D1", SwitchState::on, 10'000'000);
        dispatch("D2", SwitchState::on, 20'000'000);
        dispatch("D2", SwitchState::off, 30'000'000);
        dispatch("D3", SwitchState::off, 40'000'000);
        cfg.uploads.push_back(netsim::UploadRequest{"D2", 31'000'000, 600});
        cfg.uploads.push_back(netsim::UploadRequest{"D3", 41'000'000, 600});
    }
    return cfg;
}

inline DecoupleResult decouple_experiment(std::uint64_t seed) {
    DecoupleResult out;
    const netsim::SimResult active = netsim::run(decouple_ring_config(seed, true));
    const netsim::SimResult idle = netsim::run(decouple_ring_config(seed, false));
    out.ring_events_active = active.events.size();
    out.ring_events_idle = idle.events.size();
    out.ring_report = observer::indistinguishability_test(active.events, idle.events);

    const std::vector<ChannelEvent> star_active = observer::baseline_star_run(sample_star_workload());
    const std::vector<ChannelEvent> star_idle = observer::baseline_star_run({});
    out.star_events_active = star_active.size();
    out.star_events_idle = star_idle.size();
    out.star_report = observer::indistinguishability_test(star_active, star_idle);
    return out;
}

// ---- linear fit helper for trend checks ----

struct AffineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
    double max_abs_residual = 0.0;
};

inline AffineFit fit_affine(const std::vector<double>& xs, const std::vector<double>& ys) {
    AffineFit fit;
    const std::size_t n = xs.size();
    if (n < 2 || ys.size() != n) throw DomainError("affine fit needs two matched samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0) throw DomainError("affine fit is degenerate");
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = fit.slope * xs[i] + fit.intercept;
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
        fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(ys[i] - pred));
    }
    fit.r_squared = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

// ---- CSV emitters (gnuplot-ready) ----

inline std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::ostringstream os;
    os << "devices,rounds,mean_latency_ms,var_latency_ms2,sealed_token_bytes\n";
    for (const auto& p : points)
        os << p.devices << ',' << p.rounds << ',' << p.mean_latency_us / 1000.0 << ','
           << p.var_latency_us / 1e6 << ',' << p.sealed_length << '\n';
    return os.str();
}

inline std::string parallel_csv(const std::vector<ParallelPoint>& points) {
    std::ostringstream os;
    os << "rings,devices_per_ring,per_ring_mean_latency_ms,speedup_vs_single\n";
    for (const auto& p : points)
        os << p.rings << ',' << p.devices_per_ring << ',' << p.per_ring_mean_latency_us / 1000.0 << ','
           << p.speedup_vs_single << '\n';
    return os.str();
}

inline std::string skew_csv(const SkewComparison& cmp) {
    std::ostringstream os;
    os << "setting,sealed_token_bytes,mean_latency_ms\n";
    os << "mixed," << cmp.mixed_sealed_length << ',' << cmp.mixed_mean_latency_us / 1000.0 << '\n';
    os << "nonskew," << cmp.nonskew_sealed_length << ',' << cmp.nonskew_mean_latency_us / 1000.0 << '\n';
    os << "skew," << cmp.skew_sealed_length << ',' << cmp.skew_mean_latency_us / 1000.0 << '\n';
    return os.str();
}

} // namespace ringveil::bench

#endif
