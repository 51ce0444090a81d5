#pragma once

// Closed-loop simulation: attack-trace generation under the admissibility and
// duration assumptions, per-step strategy invocation, trajectory/decision
// logging, and the paired three-strategy comparison.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crosslayer/online_defense.hpp"
#include "crosslayer/stability_cert.hpp"

namespace crosslayer {

enum class TracePolicy {
    UniformSplit,    // attacked steps carry budget/n on every channel
    ForceOneChannel, // the whole threshold rate into one (seeded) channel
    RandomAdmissible // seeded random vector inside caps and budget
};

inline const char* to_string(TracePolicy p) {
    switch (p) {
        case TracePolicy::UniformSplit: return "uniform-split";
        case TracePolicy::ForceOneChannel: return "force-one-channel";
        case TracePolicy::RandomAdmissible: return "random-admissible";
    }
    return "?";
}

struct AttackTrace {
    std::vector<Vector> flows; // one per step
    std::string policy;
    std::uint64_t seed = 0;
    int attack_offset = 0;

    int horizon() const { return static_cast<int>(flows.size()); }
    bool attacked(long k) const { return flows[k].cwiseAbs().maxCoeff() > 0.0; }

    void validate(const NetworkConfig& cfg, const AttackBudget& budget,
                  const PplsSystem& sys) const {
        for (const auto& f : flows)
            if (!admissible(cfg, f))
                throw InvalidInputError("AttackTrace: inadmissible flow");
        for (long start = 0; start < horizon();) {
            const ModePhase mp = sys.mode_at(start);
            const int dwell = sys.sub(mp.mode).dwell;
            int count = 0;
            for (long k = start; k < start + dwell && k < horizon(); ++k)
                if (attacked(k)) ++count;
            if (count > budget.duration_caps[mp.mode - 1])
                throw InvalidInputError("AttackTrace: duration cap exceeded in dwell at " +
                                        std::to_string(start));
            start += dwell;
        }
    }
};

namespace trace_detail {
// platform-independent uniform double in [0, 1)
inline double unit(std::mt19937_64& rng) {
    return (rng() >> 11) * (1.0 / 9007199254740992.0);
}
} // namespace trace_detail

// Attacked steps are the first cap_i steps of each dwell starting at
// `attack_offset` (the worked example attacks at offsets 1, 2 of each dwell).
inline AttackTrace generate_trace(const NetworkConfig& cfg, const AttackBudget& budget,
                                  const PplsSystem& sys, TracePolicy policy,
                                  std::uint64_t seed, int horizon,
                                  int attack_offset = 1) {
    budget.validate(sys);
    AttackTrace tr;
    tr.policy = to_string(policy);
    tr.seed = seed;
    tr.attack_offset = attack_offset;
    tr.flows.assign(horizon, Vector::Zero(cfg.n()));
    std::mt19937_64 rng(seed);

    for (long k = 0; k < horizon; ++k) {
        const ModePhase mp = sys.mode_at(k);
        const int cap = budget.duration_caps[mp.mode - 1];
        const int dwell = sys.sub(mp.mode).dwell;
        const int lo = std::min(attack_offset, dwell - cap);
        const bool hit = mp.phase >= lo && mp.phase < lo + cap;
        if (!hit) continue;
        switch (policy) {
            case TracePolicy::UniformSplit: {
                const double per = cfg.attack_budget / cfg.n();
                Vector f = Vector::Constant(cfg.n(), per);
                for (int j = 0; j < cfg.n(); ++j) f(j) = std::min(f(j), cfg.attack_cap(j));
                tr.flows[k] = f;
                break;
            }
            case TracePolicy::ForceOneChannel: {
                std::vector<int> forceable;
                for (int j = 0; j < cfg.n(); ++j) {
                    const double th = force_jam_threshold(cfg, j);
                    if (th <= std::min(cfg.attack_cap(j), cfg.attack_budget))
                        forceable.push_back(j);
                }
                if (forceable.empty()) break; // nothing forcible; leave the step clean
                const int j = forceable[static_cast<size_t>(
                    trace_detail::unit(rng) * forceable.size())];
                tr.flows[k](j) = std::max(force_jam_threshold(cfg, j), 0.0);
                break;
            }
            case TracePolicy::RandomAdmissible: {
                Vector f(cfg.n());
                for (int j = 0; j < cfg.n(); ++j)
                    f(j) = trace_detail::unit(rng) * cfg.attack_cap(j);
                const double total = f.sum();
                if (total > cfg.attack_budget)
                    f *= (cfg.attack_budget / total) * trace_detail::unit(rng);
                tr.flows[k] = f;
                break;
            }
        }
    }
    return tr;
}

enum class Strategy { CrossLayered, FixedAllocation, FixedGain };

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::CrossLayered: return "cross-layered";
        case Strategy::FixedAllocation: return "gain-only";
        case Strategy::FixedGain: return "allocation-only";
    }
    return "?";
}

struct SimMetrics {
    double peak_norm_ratio = 0.0;  // max |x(k)| / |x(0)|
    double oscillation = 0.0;      // sum |x(k+1) - x(k)|
    double final_norm_ratio = 0.0; // |x(end)| / |x(0)|
    long settling_index = -1;      // first k staying below 1e-3 |x(0)|
};

struct SimResult {
    std::vector<Vector> x;       // horizon + 1 states
    std::vector<double> v;       // Lyapunov values
    std::vector<DefenseDecision> decisions; // one per step
    std::vector<bool> attacked;
    SimMetrics metrics;
    Strategy strategy = Strategy::CrossLayered;

    std::vector<RateRecord> rate_records() const {
        std::vector<RateRecord> recs;
        for (size_t k = 0; k < decisions.size(); ++k)
            recs.push_back({static_cast<long>(k), v[k], v[k + 1],
                            decisions[k].beta_star, attacked[k]});
        return recs;
    }
};

inline SimResult run(Defender& defender, const AttackTrace& trace, Strategy strategy,
                     const Vector& x0, const BandwidthAlloc* initial_alloc = nullptr) {
    const PplsSystem& sys = defender.sys();
    const NetworkConfig& cfg = defender.cfg();
    const int horizon = trace.horizon();

    SimResult res;
    res.strategy = strategy;
    res.x.reserve(horizon + 1);
    res.v.reserve(horizon + 1);
    res.x.push_back(x0);
    res.v.push_back(lyapunov_value(sys, defender.design(), {0, x0}));

    BandwidthAlloc w_prev = strategy == Strategy::FixedAllocation
                                ? BandwidthAlloc{cfg.normal_flow}
                                : (initial_alloc ? *initial_alloc : defender.equal_split());
    SystemState st{0, x0};

    for (long k = 0; k < horizon; ++k) {
        const AttackFlow attack{trace.flows[k]};
        const int mode = sys.mode_at(k).mode;
        DefenseDecision d;
        switch (strategy) {
            case Strategy::CrossLayered: d = defender.defend(mode, w_prev, attack); break;
            case Strategy::FixedAllocation: d = defender.strategy_a(mode, attack); break;
            case Strategy::FixedGain: d = defender.strategy_b(mode, w_prev, attack); break;
        }

        const ChannelState realized = enabling_state(cfg, w_prev, d.w, attack);
        if (strategy == Strategy::FixedAllocation) {
            if (!(realized == d.l))
                throw std::logic_error("run: realized state diverged from decision");
        } else if (d.attacked) {
            if (!(realized == d.l))
                throw std::logic_error("run: realized state diverged from decision");
        } else if (!(realized == ChannelState::all_on(cfg.n()))) {
            throw std::logic_error("run: attack-free step lost a channel; normal flow "
                                   "does not survive the allocation delay here");
        }

        st = step(sys, st, d.gain, realized);
        res.x.push_back(st.x);
        res.v.push_back(lyapunov_value(sys, defender.design(), st));
        res.decisions.push_back(std::move(d));
        res.attacked.push_back(trace.attacked(k));
        w_prev = res.decisions.back().w;
    }

    const double n0 = x0.norm();
    SimMetrics& m = res.metrics;
    for (long k = 0; k + 1 <= horizon; ++k)
        m.oscillation += (res.x[k + 1] - res.x[k]).norm();
    for (const auto& x : res.x)
        m.peak_norm_ratio = std::max(m.peak_norm_ratio, n0 > 0 ? x.norm() / n0 : 0.0);
    m.final_norm_ratio = n0 > 0 ? res.x.back().norm() / n0 : 0.0;
    m.settling_index = -1;
    for (long k = horizon; k >= 0; --k) {
        if (res.x[k].norm() >= 1e-3 * n0) {
            if (k < horizon) m.settling_index = k + 1;
            break;
        }
        if (k == 0) m.settling_index = 0;
    }
    return res;
}

// Per-step rate contract of a finished run; unattacked steps are held to the
// attack-free rates, attacked steps to the decision's rate.
inline RateReport verify_lemma_rates(const PplsSystem& sys, const LyapunovDesign& design,
                                     const SimResult& result, double slack = 1e-6) {
    (void)sys;
    (void)design;
    return verify_rate_contract(result.rate_records(), slack);
}

struct Comparison {
    SimResult cross, gain_only, alloc_only;
};

// The three strategies on one shared trace, so metrics are paired.
inline Comparison compare_strategies(Defender& defender, const AttackTrace& trace,
                                     const Vector& x0) {
    Comparison cmp;
    cmp.cross = run(defender, trace, Strategy::CrossLayered, x0);
    cmp.gain_only = run(defender, trace, Strategy::FixedAllocation, x0);
    cmp.alloc_only = run(defender, trace, Strategy::FixedGain, x0);
    return cmp;
}

} // namespace crosslayer
