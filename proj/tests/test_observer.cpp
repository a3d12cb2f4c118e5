#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ringveil/bench.hpp"
#include "ringveil/netsim.hpp"
#include "ringveil/observer.hpp"

using namespace ringveil;
using namespace ringveil::observer;

TEST_CASE("baseline star run shows per-device traffic") {
    const auto workload = bench::sample_star_workload();
    const auto events = baseline_star_run(workload);
    // 4 requests plus 2 read responses
    REQUIRE(events.size() == 6);
    std::map<std::string, int> to_device, from_device;
    for (const auto& e : events) {
        if (e.sender == "hub") ++to_device[e.receiver];
        else ++from_device[e.sender];
    }
    CHECK(to_device["D1"] == 1);
    CHECK(to_device["D2"] == 2);
    CHECK(to_device["D3"] == 1);
    CHECK(from_device["D2"] == 1);
    CHECK(from_device["D3"] == 1);
    CHECK(from_device.count("D1") == 0);

    CHECK(baseline_star_run({}).empty());

    const auto read_only = baseline_star_run({{"D2", StarCommandKind::read, 0, 128}});
    REQUIRE(read_only.size() == 2);
    CHECK(read_only[0].receiver == "D2");
    CHECK(read_only[1].sender == "D2");
}

TEST_CASE("extract_view splits command and data sightings") {
    // The star workload's view matches the classic two-device table: a
    // command sighting for each request, a data sighting for each reply.
    const auto events = baseline_star_run({{"D1", StarCommandKind::set, 1000, 0},
                                           {"D2", StarCommandKind::read, 2000, 256}});
    const AdversarialView view = extract_view(events);
    REQUIRE(view.in_c.size() == 2);
    REQUIRE(view.op_d.size() == 1);
    CHECK(view.in_c[0].device_id == "D1");
    CHECK(view.in_c[0].time_us == 1000);
    CHECK(view.in_c[1].device_id == "D2");
    CHECK(view.op_d[0].device_id == "D2");

    const AdversarialView empty = extract_view({});
    CHECK(empty.in_c.empty());
    CHECK(empty.op_d.empty());
}

TEST_CASE("ring traces give every position identical sightings per round") {
    netsim::SimConfig cfg;
    cfg.seed = 2;
    cfg.latency.alpha_us = 1000;
    netsim::RingConfig ring = netsim::build_ring("r1", {"D1", "D2", "D3"}, netsim::Topology::ring, 256, 0);
    ring.token_period_us = 100'000;
    cfg.rings.push_back(std::move(ring));
    cfg.duration_us = 1'000'000;
    const auto result = netsim::run(cfg);
    REQUIRE(result.rounds.size() >= 10);

    // per round: one hub->D1, one D1->D2, one D2->D3, one D3->hub, all of
    // one length
    std::map<std::pair<std::string, std::string>, std::size_t> links;
    std::set<std::uint32_t> lengths;
    for (const auto& e : result.events) {
        ++links[{e.sender, e.receiver}];
        lengths.insert(e.length);
    }
    CHECK(lengths.size() == 1);
    REQUIRE(links.size() == 4);
    for (const auto& [link, count] : links) CHECK(count == result.rounds.size());

    const AdversarialView view = extract_view(result.events);
    CHECK(view.in_c.size() + view.op_d.size() == result.events.size());
}

TEST_CASE("ks statistic basics") {
    CHECK(ks_statistic({}, {}) == 0.0);
    CHECK(ks_statistic({1, 2, 3}, {}) == 1.0);
    CHECK(ks_statistic({1, 2, 3, 4}, {1, 2, 3, 4}) == 0.0);
    CHECK(ks_statistic({1, 1, 1}, {2, 2, 2}) == 1.0);
    // half the mass shifted
    CHECK(ks_statistic({1, 1, 1, 1}, {1, 1, 9, 9}) == Catch::Approx(0.5));
}

TEST_CASE("indistinguishability test flags the star baseline, not the ring") {
    const auto result = bench::decouple_experiment(123);
    CHECK(result.ring_report.count_per_link_equal);
    CHECK(result.ring_report.length_multiset_equal);
    CHECK(result.ring_report.interarrival_ks_stat == 0.0);
    CHECK(result.ring_pass());

    CHECK_FALSE(result.star_report.count_per_link_equal);
    CHECK_FALSE(result.star_report.length_multiset_equal);
    CHECK(result.star_leaks());

    CHECK(result.star_events_active == 6);
    CHECK(result.star_events_idle == 0);
    CHECK(result.ring_events_active == result.ring_events_idle);
}

TEST_CASE("identical traces compare equal with zero KS") {
    const auto events = baseline_star_run(bench::sample_star_workload());
    const auto report = indistinguishability_test(events, events);
    CHECK(report.pass());
    CHECK(report.interarrival_ks_stat == 0.0);
}

TEST_CASE("round-count mismatch is a comparison error") {
    const auto events = baseline_star_run(bench::sample_star_workload());
    CHECK_THROWS_AS(indistinguishability_test(events, events, 0.1, 10, 12), ComparisonError);
    CHECK_NOTHROW(indistinguishability_test(events, events, 0.1, 10, 10));
}

TEST_CASE("record attack success stays near 1/l") {
    for (const std::uint32_t l : {2u, 4u}) {
        const std::uint32_t trials = 400;
        const double rate = record_attack_game(l, trials, 1000 + l);
        const double p = 1.0 / l;
        const double sigma = std::sqrt(p * (1 - p) / trials);
        INFO("l=" << l << " rate=" << rate);
        CHECK(std::abs(rate - p) <= 3 * sigma);
    }
    CHECK_THROWS_AS(record_attack_game(1, 1000, 1), DomainError);
    CHECK_THROWS_AS(record_attack_game(2, 10, 1), DomainError);
}

TEST_CASE("clone attack cost model") {
    const auto params = timelock::param_gen(64, 321);

    const auto equal_rates = clone_attack_game(params, 1000, 5000, 5000);
    CHECK(equal_rates.device_squarings == 1000);
    CHECK(equal_rates.adversary_squarings == 1000);
    CHECK(equal_rates.adversary_time_s == equal_rates.device_time_s);

    // an adversary at half speed takes twice the time for the same count
    const auto slower = clone_attack_game(params, 1000, 5000, 2500);
    CHECK(slower.adversary_squarings == slower.device_squarings);
    CHECK(slower.adversary_time_s == Catch::Approx(2.0 * slower.device_time_s));

    // the owner's totient path is logarithmic, not linear, and matches
    CHECK(equal_rates.trapdoor_matches);
    CHECK(equal_rates.trapdoor_multiplications < 200); // ~2*log2(phi) << 1000
}

TEST_CASE("state handoff does not shorten the remaining distance") {
    // A partially solved puzzle still costs the full remainder: solving
    // from the halfway value takes exactly t_hat/2 more squarings, so
    // adversary time given the state equals time without it minus work
    // already sunk by the device, never less.
    const auto params = timelock::param_gen(64, 654);
    const std::uint64_t t_hat = 2000;
    const Bigint halfway = timelock::solve_value(params.a, params.n, t_hat / 2);
    CHECK(timelock::solve_value(halfway, params.n, t_hat / 2) ==
          timelock::solve_value(params.a, params.n, t_hat));
}
