#pragma once

// Offline bi-level worst case: enumerate the channel states an attacker can
// force by breaking the delay condition, bound what the defender can
// guarantee by allocation, filter the candidate worst-case states, and decide
// each candidate by an exact LP feasibility question on the attack flow. The
// previous allocation is fixed at zero throughout, which is the worst case
// for the delay test.
//
// A brute-force oracle (outer grid over admissible attack flows, inner exact
// case analysis of what the defender can realize) validates the enumeration
// on small instances.

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "crosslayer/channel_net.hpp"
#include "crosslayer/conic.hpp"
#include "crosslayer/lmi_builder.hpp"
#include "crosslayer/lyapunov_design.hpp"
#include "crosslayer/plant.hpp"

namespace crosslayer {

// ============================================================================
// Per-state optimum table (all 2^n states of one subsystem)
// ============================================================================

struct StateBetaTable {
    int mode = 0;
    int n = 0;
    std::vector<double> beta;  // indexed by state mask
    std::vector<Matrix> gain;

    double beta_of(const ChannelState& l) const { return beta[l.mask()]; }
    const Matrix& gain_of(const ChannelState& l) const { return gain[l.mask()]; }
};

inline StateBetaTable state_beta_table(const PplsSystem& sys, const LyapunovDesign& d,
                                       int mode, double k_bar, bool k_box_active = true) {
    StateBetaTable t;
    t.mode = mode;
    t.n = sys.n();
    const unsigned total = 1u << sys.n();
    t.beta.resize(total);
    t.gain.resize(total);
    for (unsigned mask = 0; mask < total; ++mask) {
        OnlineResult r = solve_online(sys.sub(mode), d.p_prev(mode), d.p_cur(mode),
                                      ChannelState::from_mask(mask, sys.n()), k_bar,
                                      k_box_active);
        t.beta[mask] = r.beta;
        t.gain[mask] = std::move(r.gain);
    }
    return t;
}

// ============================================================================
// Force patterns and safe states
// ============================================================================

// Channels the attacker can jam outright by violating the delay condition,
// within per-channel caps and the total budget. '?' entries stay open.
struct ForcePattern {
    unsigned jam_mask = 0; // bit j set => channel j forced to 0
    int n = 0;

    bool jams(int j) const { return (jam_mask >> j) & 1u; }
    int jam_count() const {
        int c = 0;
        for (int j = 0; j < n; ++j) c += jams(j);
        return c;
    }
    // the pattern with every '?' set to 1
    ChannelState open_state() const {
        std::vector<int> bits(n, 1);
        for (int j = 0; j < n; ++j)
            if (jams(j)) bits[j] = 0;
        return ChannelState(std::move(bits));
    }
    std::string str() const {
        std::string s = "[";
        for (int j = 0; j < n; ++j) s += (j ? " " : "") + std::string(jams(j) ? "0" : "?");
        return s + "]";
    }
};

inline std::vector<ForcePattern> enumerate_force(const NetworkConfig& cfg) {
    cfg.validate();
    const int n = cfg.n();
    // channels whose buffer cannot absorb even the normal flow are jammed at
    // zero attack cost and therefore belong to every pattern
    unsigned dead = 0;
    for (int j = 0; j < n; ++j)
        if (force_jam_threshold(cfg, j) <= 0.0) dead |= 1u << j;

    std::vector<ForcePattern> out;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if ((mask & dead) != dead) continue;
        double cost = 0.0;
        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
            if (!((mask >> j) & 1u)) continue;
            const double th = force_jam_threshold(cfg, j);
            if (th > cfg.attack_cap(j)) ok = false;
            cost += std::max(th, 0.0);
        }
        if (ok && cost <= cfg.attack_budget) out.push_back({mask, n});
    }
    return out;
}

// residual attack budget once the pattern's channels are jammed at exactly
// their thresholds
inline double residual_budget(const NetworkConfig& cfg, const ForcePattern& f) {
    double spent = 0.0;
    for (int j = 0; j < cfg.n(); ++j)
        if (f.jams(j)) spent += std::max(force_jam_threshold(cfg, j), 0.0);
    return cfg.attack_budget - spent;
}

enum class BoundaryMode {
    // Reproduces the published safe-state table: the allocation bound is
    // non-strict, and a target state is additionally unsafe when the residual
    // budget can delay-jam one of its channels.
    PaperTable,
    // The allocation bound exactly as printed, nothing else.
    FormulaNonstrict
};

// States the defender can guarantee by allocation when the attacker forcibly
// jams the pattern's channels.
inline std::vector<ChannelState> enumerate_safe(const NetworkConfig& cfg,
                                                const ForcePattern& f,
                                                BoundaryMode mode) {
    const int n = cfg.n();
    const double rem = residual_budget(cfg, f);
    std::vector<ChannelState> out;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (mask & f.jam_mask) continue; // must be disjoint from the jammed set
        double flow_sum = 0.0, cap_sum = 0.0;
        bool delay_safe = true;
        for (int j = 0; j < n; ++j) {
            if (!((mask >> j) & 1u)) continue;
            flow_sum += cfg.normal_flow(j);
            cap_sum += cfg.attack_cap(j);
            const double th = force_jam_threshold(cfg, j);
            if (th <= std::min(rem, cfg.attack_cap(j))) delay_safe = false;
        }
        const double worst_alloc = flow_sum + std::min(rem, cap_sum);
        const bool alloc_safe = cfg.total_bandwidth >= worst_alloc;
        const bool safe = (mode == BoundaryMode::PaperTable) ? (alloc_safe && delay_safe)
                                                             : alloc_safe;
        if (safe) out.push_back(ChannelState::from_mask(mask, n));
    }
    return out;
}

// ============================================================================
// The smart enumeration
// ============================================================================

struct SeaOptions {
    BoundaryMode boundary = BoundaryMode::PaperTable;
    double k_bar = 100.0;
    bool k_box_active = true;
    double strict_eps = 0.0; // 0 => 1e-9 * (W_sigma + attack budget)
    double beta_tol = 1e-7;  // relative, for set-membership comparisons
};

struct BranchAudit {
    ForcePattern pattern;
    double beta_open = 0.0;    // table value of the pattern with '?' -> 1
    double beta_hat = 0.0;     // min over the safe set (+inf when empty)
    std::vector<ChannelState> safe;
    std::vector<ChannelState> candidates; // ascending by table value
    bool excluded = false;                // empty candidate set
    double beta_bar = -std::numeric_limits<double>::infinity();
    ChannelState decided_state;
    int lp_checks = 0;
    std::optional<Vector> last_push_witness; // attack flow from the last feasible check
};

struct WorstCaseResult {
    int mode = 0;
    double beta_bar = 0.0;
    double beta_tilde = 0.0; // attacker-guaranteed floor from the patterns
    ChannelState worst_state;
    ForcePattern worst_pattern;
    std::vector<BranchAudit> branches;
    StateBetaTable table;
};

namespace sea_detail {

// Does an attack flow belonging to this branch exist that makes the candidate
// state and everything better unaffordable? "Belonging" means the flow
// delay-jams exactly the pattern's channels: at or above threshold there,
// strictly below threshold elsewhere. Within a branch, allocation is then the
// only blocking mechanism, which keeps the partition over patterns exact.
// Decided exactly in rational arithmetic.
inline conic::LpOutcome push_beyond_lp(const NetworkConfig& cfg, const ForcePattern& f,
                                       const ChannelState& cand,
                                       const std::vector<ChannelState>& blockers,
                                       double strict_eps) {
    conic::LpProblem lp;
    std::vector<conic::VarId> r;
    for (int j = 0; j < cfg.n(); ++j)
        r.push_back(lp.add_var("r" + std::to_string(j + 1), 0.0, cfg.attack_cap(j)));

    conic::LinExpr budget;
    for (int j = 0; j < cfg.n(); ++j) budget.add(r[j], 1.0);
    lp.add_row(budget, conic::LpRel::LE, cfg.attack_budget, "budget");

    for (int j = 0; j < cfg.n(); ++j) {
        conic::LinExpr e;
        e.add(r[j], 1.0);
        const double th = force_jam_threshold(cfg, j);
        if (f.jams(j)) {
            lp.add_row(e, conic::LpRel::GE, th, "force ch" + std::to_string(j + 1));
        } else if (th <= cfg.attack_cap(j)) {
            lp.add_row(e, conic::LpRel::LT, th, "spare ch" + std::to_string(j + 1));
        }
    }

    auto enabled_flow = [&](const ChannelState& l) {
        double s = 0.0;
        for (int j = 0; j < cfg.n(); ++j)
            if (l.l[j]) s += cfg.normal_flow(j);
        return s;
    };
    {
        conic::LinExpr e;
        for (int j = 0; j < cfg.n(); ++j)
            if (cand.l[j]) e.add(r[j], 1.0);
        lp.add_row(e, conic::LpRel::GT, cfg.total_bandwidth - enabled_flow(cand),
                   "candidate unaffordable");
    }
    for (const auto& l : blockers) {
        conic::LinExpr e;
        for (int j = 0; j < cfg.n(); ++j)
            if (l.l[j]) e.add(r[j], 1.0);
        lp.add_row(e, conic::LpRel::GT, cfg.total_bandwidth - enabled_flow(l),
                   "block " + l.str());
    }
    return conic::lp_feasible(lp, strict_eps);
}

} // namespace sea_detail

inline WorstCaseResult sea(const PplsSystem& sys, const LyapunovDesign& d,
                           const NetworkConfig& cfg, int mode, SeaOptions opt = {},
                           const StateBetaTable* precomputed = nullptr) {
    WorstCaseResult res;
    res.mode = mode;
    res.table = precomputed ? *precomputed
                            : state_beta_table(sys, d, mode, opt.k_bar, opt.k_box_active);
    const double eps =
        opt.strict_eps > 0 ? opt.strict_eps
                           : 1e-9 * (cfg.total_bandwidth + cfg.attack_budget);
    const int n = cfg.n();

    std::vector<ForcePattern> patterns = enumerate_force(cfg);

    // Step 4: attacker-guaranteed floor over the patterns
    res.beta_tilde = -std::numeric_limits<double>::infinity();
    for (const auto& f : patterns)
        res.beta_tilde = std::max(res.beta_tilde, res.table.beta_of(f.open_state()));

    auto tol = [&](double b) { return opt.beta_tol * (1.0 + std::abs(b)); };

    for (const auto& f : patterns) {
        BranchAudit br;
        br.pattern = f;
        br.beta_open = res.table.beta_of(f.open_state());
        br.safe = enumerate_safe(cfg, f, opt.boundary);

        br.beta_hat = std::numeric_limits<double>::infinity();
        for (const auto& l : br.safe)
            br.beta_hat = std::min(br.beta_hat, res.table.beta_of(l));

        // Step 5: candidate states, ascending by table value
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            if (mask & f.jam_mask) continue;
            const double b = res.table.beta[mask];
            if (b >= res.beta_tilde - tol(b) && b <= br.beta_hat + tol(b))
                br.candidates.push_back(ChannelState::from_mask(mask, n));
        }
        std::sort(br.candidates.begin(), br.candidates.end(),
                  [&](const ChannelState& a, const ChannelState& b) {
                      const double ba = res.table.beta_of(a), bb = res.table.beta_of(b);
                      if (ba != bb) return ba < bb;
                      return a < b;
                  });

        if (br.candidates.empty()) {
            br.excluded = true; // this pattern cannot host the global worst case
            res.branches.push_back(std::move(br));
            continue;
        }

        // Step 6: walk candidates upward; the first one the attacker cannot
        // push beyond decides the branch.
        bool decided = false;
        for (const auto& cand : br.candidates) {
            std::vector<ChannelState> blockers;
            for (unsigned mask = 0; mask < (1u << n); ++mask) {
                if (mask & f.jam_mask) continue;
                const ChannelState l = ChannelState::from_mask(mask, n);
                if (l == cand) continue;
                const double b = res.table.beta[mask];
                if (b >= br.beta_open - tol(b) &&
                    b < res.table.beta_of(cand) - tol(res.table.beta_of(cand)))
                    blockers.push_back(l);
            }
            ++br.lp_checks;
            conic::LpOutcome lp = sea_detail::push_beyond_lp(cfg, f, cand, blockers, eps);
            if (!lp.feasible) {
                br.beta_bar = res.table.beta_of(cand);
                br.decided_state = cand;
                decided = true;
                break;
            }
            br.last_push_witness = lp.witness;
        }
        if (!decided) {
            // the attacker pushed past every candidate; the guaranteed safe
            // optimum caps the branch
            br.beta_bar = br.beta_hat;
            br.decided_state = br.candidates.back();
        }
        res.branches.push_back(std::move(br));
    }

    // Step 7
    res.beta_bar = -std::numeric_limits<double>::infinity();
    for (const auto& br : res.branches) {
        if (br.excluded) continue;
        if (br.beta_bar > res.beta_bar) {
            res.beta_bar = br.beta_bar;
            res.worst_state = br.decided_state;
            res.worst_pattern = br.pattern;
        }
    }
    if (!std::isfinite(res.beta_bar))
        throw std::logic_error("sea: every branch excluded; the floor pattern's branch "
                               "must survive");
    return res;
}

// ============================================================================
// Brute-force oracle
// ============================================================================

// Defender's exact best response to one attack flow with zero previous
// allocation: minimum table value over the states that survive the delay test
// and fit the allocation budget.
inline double best_response(const NetworkConfig& cfg, const StateBetaTable& table,
                            const Vector& attack) {
    const int n = cfg.n();
    std::vector<bool> delay_ok(n), starvable(n);
    for (int j = 0; j < n; ++j) {
        const double need = cfg.normal_flow(j) + attack(j);
        delay_ok[j] = (need)*cfg.alloc_delay < cfg.buffer(j);
        starvable[j] = need > 0.0;
    }
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        double needed = 0.0;
        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
            if ((mask >> j) & 1u) {
                if (!delay_ok[j]) ok = false;
                needed += cfg.normal_flow(j) + attack(j);
            } else if (delay_ok[j] && !starvable[j]) {
                ok = false;
            }
        }
        if (ok && needed <= cfg.total_bandwidth)
            best = std::min(best, table.beta[mask]);
    }
    return best;
}

// Outer maximization by grid search over admissible attack flows, seeded with
// every structurally meaningful corner: zeros, caps, jam thresholds, and
// allocation-breaking distributions for every channel subset.
inline double brute_force_worst_case(const PplsSystem& sys, const LyapunovDesign& d,
                                     const NetworkConfig& cfg, int mode,
                                     int grid_density, SeaOptions opt = {},
                                     const StateBetaTable* precomputed = nullptr) {
    StateBetaTable table = precomputed
                               ? *precomputed
                               : state_beta_table(sys, d, mode, opt.k_bar, opt.k_box_active);
    const int n = cfg.n();
    const double nudge = 1e-6 * (cfg.total_bandwidth + cfg.attack_budget);

    std::vector<std::vector<double>> values(n);
    for (int j = 0; j < n; ++j) {
        auto& vs = values[j];
        vs.push_back(0.0);
        vs.push_back(cfg.attack_cap(j));
        const double th = force_jam_threshold(cfg, j);
        if (th > 0 && th <= cfg.attack_cap(j)) {
            vs.push_back(th);
            if (th - nudge > 0) vs.push_back(th - nudge);
        }
        for (int g = 1; g < grid_density; ++g)
            vs.push_back(cfg.attack_cap(j) * g / grid_density);
        std::sort(vs.begin(), vs.end());
        vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    }

    double worst = -std::numeric_limits<double>::infinity();
    Vector attack = Vector::Zero(n);
    std::function<void(int)> rec = [&](int j) {
        if (j == n) {
            if (admissible(cfg, attack))
                worst = std::max(worst, best_response(cfg, table, attack));
            return;
        }
        for (double v : values[j]) {
            attack(j) = v;
            rec(j + 1);
        }
    };
    rec(0);

    // targeted allocation-breaking points: for every subset, spread just over
    // the budget of that subset, on top of every jam corner of the complement
    for (unsigned jam = 0; jam < (1u << n); ++jam) {
        Vector base = Vector::Zero(n);
        double spent = 0.0;
        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
            if (!((jam >> j) & 1u)) continue;
            const double th = force_jam_threshold(cfg, j);
            if (th > cfg.attack_cap(j)) ok = false;
            base(j) = std::max(th, 0.0);
            spent += base(j);
        }
        if (!ok || spent > cfg.attack_budget) continue;
        for (unsigned tgt = 1; tgt < (1u << n); ++tgt) {
            if (tgt & jam) continue;
            double flow = 0.0;
            int cnt = 0;
            for (int j = 0; j < n; ++j)
                if ((tgt >> j) & 1u) {
                    flow += cfg.normal_flow(j);
                    ++cnt;
                }
            const double excess = cfg.total_bandwidth - flow + nudge;
            if (excess < 0) continue;
            Vector attack2 = base;
            const double per = excess / cnt;
            bool fits = true;
            for (int j = 0; j < n && fits; ++j)
                if ((tgt >> j) & 1u) {
                    attack2(j) = per;
                    if (per > cfg.attack_cap(j)) fits = false;
                }
            if (fits && admissible(cfg, attack2))
                worst = std::max(worst, best_response(cfg, table, attack2));
        }
    }
    return worst;
}

} // namespace crosslayer
