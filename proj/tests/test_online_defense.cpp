#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "crosslayer/online_defense.hpp"
#include "paper_data.hpp"

using namespace crosslayer;
using Catch::Approx;

namespace {

Defender make_defender() {
    return Defender(paper::system(), paper::printed_design(), paper::network(),
                    paper::k_bar);
}

} // namespace

TEST_CASE("feasible states without an attack", "[online_defense]") {
    Defender def = make_defender();
    auto states = def.feasible_states(def.equal_split(), {Vector::Zero(4)});
    CHECK(states.size() == 15); // every nonzero state fits the budget
}

TEST_CASE("feasible states under a single-channel jam", "[online_defense]") {
    Defender def = make_defender();
    Vector r(4);
    r << 15, 0, 0, 0; // delay test of channel 1 fails exactly at the boundary
    auto states = def.feasible_states({Vector::Zero(4)}, {r});
    CHECK(states.size() == 7);
    for (const auto& l : states) CHECK(l.l[0] == 0);
}

TEST_CASE("feasible states under the uniform attack", "[online_defense]") {
    Defender def = make_defender();
    Vector r = Vector::Constant(4, 5.0);
    auto states = def.feasible_states(def.equal_split(), {r});
    // delay passes everywhere ((10-5)*0.5 = 2.5 < 10); budget allows <= 2 channels
    CHECK(states.size() == 10);
    for (const auto& l : states) {
        CHECK(l.count() >= 1);
        CHECK(l.count() <= 2);
    }
}

TEST_CASE("no attack degenerates to the default decision", "[online_defense]") {
    Defender def = make_defender();
    auto d = def.defend(1, def.equal_split(), {Vector::Zero(4)});
    CHECK(d.l == ChannelState::all_on(4));
    CHECK((d.gain - paper::printed_k()[0]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.beta_star == Approx(1.3));
    CHECK_FALSE(d.attacked);
}

TEST_CASE("uniform attack prefers the published channel pairs", "[online_defense][paper]") {
    Defender def = make_defender();
    Vector r = Vector::Constant(4, 5.0);

    auto d1 = def.defend(1, def.equal_split(), {r});
    CHECK(d1.l == ChannelState::from_mask(0b1100, 4)); // channels 3 and 4
    CHECK(d1.beta_star == Approx(1.2689).margin(0.005));

    auto d2 = def.defend(2, def.equal_split(), {r});
    CHECK(d2.l == ChannelState::from_mask(0b1010, 4)); // channels 2 and 4

    auto d3 = def.defend(3, def.equal_split(), {r});
    CHECK(d3.l == ChannelState::from_mask(0b0011, 4)); // channels 1 and 2
}

TEST_CASE("decisions are consistent with the enabling condition",
          "[online_defense][property]") {
    Defender def = make_defender();
    std::mt19937 rng(55);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const NetworkConfig& cfg = def.cfg();
    BandwidthAlloc w_prev = def.equal_split();
    for (int trial = 0; trial < 60; ++trial) {
        Vector r(4);
        for (int j = 0; j < 4; ++j) r(j) = u(rng) * cfg.attack_cap(j);
        if (r.sum() > cfg.attack_budget) r *= cfg.attack_budget / r.sum() * u(rng);
        const int mode = 1 + trial % 3;
        auto d = def.defend(mode, w_prev, {r});
        CHECK(enabling_state(cfg, w_prev, d.w, {r}) == d.l);
        CHECK(d.l.count() >= 1);
        CHECK(d.w.w.sum() <= cfg.total_bandwidth + 1e-9);
        w_prev = d.w;
    }
}

TEST_CASE("joint optimum equals brute force over realizable states",
          "[online_defense][property]") {
    Defender def = make_defender();
    std::mt19937 rng(63);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const NetworkConfig& cfg = def.cfg();
    for (int trial = 0; trial < 15; ++trial) {
        Vector r(4);
        for (int j = 0; j < 4; ++j) r(j) = u(rng) * cfg.attack_cap(j);
        if (r.sum() > cfg.attack_budget) r *= cfg.attack_budget / r.sum() * u(rng);
        const int mode = 1 + trial % 3;
        BandwidthAlloc w_prev = def.equal_split();
        auto d = def.defend(mode, w_prev, {r});
        double best = std::numeric_limits<double>::infinity();
        for (const auto& l : def.feasible_states(w_prev, {r}))
            best = std::min(best, def.state_beta(mode, l).beta);
        CHECK(d.beta_star == Approx(best).margin(1e-6));
    }
}

TEST_CASE("fixed allocation coasts open loop when everything jams",
          "[online_defense]") {
    Defender def = make_defender();
    Vector r = Vector::Constant(4, 5.0); // need 10 > W = R = 5 on every channel
    auto d = def.strategy_a(1, {r});
    CHECK(d.l == ChannelState::all_off(4));
    CHECK(d.beta_star == Approx(2.0661).margin(0.005));
    for (int j = 0; j < 4; ++j) CHECK(d.w.w(j) == Approx(5.0));
}

TEST_CASE("fixed gain searches states with the default gain",
          "[online_defense]") {
    Defender def = make_defender();
    Vector r = Vector::Constant(4, 5.0);
    auto d = def.strategy_b(1, def.equal_split(), {r});
    CHECK(d.l.count() >= 1);
    CHECK(d.l.count() <= 2);
    CHECK((d.gain - paper::printed_k()[0]).cwiseAbs().maxCoeff() == 0.0);
    // the fixed-gain rate can never beat the jointly optimized one
    auto dj = def.defend(1, def.equal_split(), {r});
    CHECK(dj.beta_star <= d.beta_star + 1e-6);
}

TEST_CASE("joint optimization dominates both ablations per step",
          "[online_defense][property]") {
    Defender def = make_defender();
    std::mt19937 rng(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const NetworkConfig& cfg = def.cfg();
    for (int trial = 0; trial < 20; ++trial) {
        Vector r(4);
        for (int j = 0; j < 4; ++j) r(j) = u(rng) * cfg.attack_cap(j);
        if (r.sum() > cfg.attack_budget) r *= cfg.attack_budget / r.sum() * u(rng);
        const int mode = 1 + trial % 3;
        BandwidthAlloc w_prev = def.equal_split();
        auto dj = def.defend(mode, w_prev, {r});
        auto da = def.strategy_a(mode, {r});
        auto db = def.strategy_b(mode, w_prev, {r});
        CHECK(dj.beta_star <= da.beta_star + 1e-6);
        CHECK(dj.beta_star <= db.beta_star + 1e-6);
    }
}

TEST_CASE("zero-need channels cannot be disabled", "[online_defense]") {
    NetworkConfig cfg = paper::network();
    cfg.normal_flow(2) = 0.0; // channel 3 has nothing to starve
    Defender def(paper::system(), paper::printed_design(), cfg, paper::k_bar);
    auto states = def.feasible_states(def.equal_split(), {Vector::Zero(4)});
    for (const auto& l : states) CHECK(l.l[2] == 1);
}
