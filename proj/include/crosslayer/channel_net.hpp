#pragma once

// Network-layer semantics: flows, bandwidth, buffers, the channel enabling
// condition, attack admissibility, and the big-M linearization of the
// enabling logic.
//
// Comparisons follow the enabling condition literally: the delay test is
// strict, the allocation test is non-strict, and both are evaluated with
// exact floating-point comparisons (no tolerance). The worked example sits
// exactly on these boundaries, so tolerance fuzz would flip channel states.

#include <array>
#include <string>
#include <vector>

#include "crosslayer/errors.hpp"
#include "crosslayer/linalg.hpp"

namespace crosslayer {

// Binary channels' state: entry j is 1 when the sampling channel of state
// entry j is enabled.
struct ChannelState {
    std::vector<int> l;

    ChannelState() = default;
    explicit ChannelState(std::vector<int> bits) : l(std::move(bits)) {
        for (int b : l)
            if (b != 0 && b != 1)
                throw InvalidInputError("ChannelState: entries must be 0/1");
    }
    static ChannelState all_on(int n) { return ChannelState(std::vector<int>(n, 1)); }
    static ChannelState all_off(int n) { return ChannelState(std::vector<int>(n, 0)); }
    static ChannelState from_mask(unsigned mask, int n) {
        std::vector<int> bits(n);
        for (int j = 0; j < n; ++j) bits[j] = (mask >> j) & 1u;
        return ChannelState(std::move(bits));
    }

    int n() const { return static_cast<int>(l.size()); }
    int count() const {
        int c = 0;
        for (int b : l) c += b;
        return c;
    }
    bool any() const { return count() > 0; }
    unsigned mask() const {
        unsigned m = 0;
        for (int j = 0; j < n(); ++j) m |= static_cast<unsigned>(l[j]) << j;
        return m;
    }
    Matrix diagonal() const {
        Vector d(n());
        for (int j = 0; j < n(); ++j) d(j) = l[j];
        return Matrix(d.asDiagonal());
    }
    bool subset_of(const ChannelState& other) const {
        for (int j = 0; j < n(); ++j)
            if (l[j] && !other.l[j]) return false;
        return true;
    }
    std::string str() const {
        std::string s = "[";
        for (int j = 0; j < n(); ++j) s += (j ? " " : "") + std::to_string(l[j]);
        return s + "]";
    }

    bool operator==(const ChannelState& o) const { return l == o.l; }
    bool operator<(const ChannelState& o) const { return l < o.l; } // lexicographic
};

struct AttackFlow {
    Vector rate; // per-channel attack rate at one instant
};

struct BandwidthAlloc {
    Vector w;
};

struct NetworkConfig {
    Vector normal_flow;     // R
    Vector buffer;          // S
    Vector attack_cap;      // R-bar, per-channel attack bound
    double alloc_delay = 0; // tau
    double total_bandwidth = 0; // W_sigma
    double attack_budget = 0;   // R-tilde-sigma

    int n() const { return static_cast<int>(normal_flow.size()); }

    void validate() const {
        const int nn = n();
        if (nn == 0 || buffer.size() != nn || attack_cap.size() != nn)
            throw InvalidInputError("NetworkConfig: inconsistent channel counts");
        if (!(alloc_delay > 0))
            throw InvalidInputError("NetworkConfig: allocation delay must be positive");
        if (normal_flow.minCoeff() < 0 || buffer.minCoeff() < 0 ||
            attack_cap.minCoeff() < 0 || total_bandwidth < 0 || attack_budget < 0)
            throw InvalidInputError("NetworkConfig: rates and buffers must be nonnegative");
        // The worked example sits exactly at W = cap + flow, and full
        // allocation still covers one channel there (the allocation test is
        // non-strict), so equality is admissible.
        for (int j = 0; j < nn; ++j)
            if (!(total_bandwidth >= attack_cap(j) + normal_flow(j)))
                throw InvalidInputError(
                    "NetworkConfig: total bandwidth must cover attack cap plus normal "
                    "flow on every channel (channel " + std::to_string(j + 1) + ")");
    }
};

// Channel j is enabled iff the buffer survives the allocation lag under the
// previous bandwidth (strict) and the new bandwidth covers the input flow
// (non-strict).
inline ChannelState enabling_state(const NetworkConfig& cfg, const BandwidthAlloc& w_prev,
                                   const BandwidthAlloc& w, const AttackFlow& attack) {
    const int n = cfg.n();
    if (w_prev.w.size() != n || w.w.size() != n || attack.rate.size() != n)
        throw InvalidInputError("enabling_state: dimension mismatch");
    std::vector<int> bits(n, 0);
    for (int j = 0; j < n; ++j) {
        const double need = cfg.normal_flow(j) + attack.rate(j);
        const bool delay_ok = (need - w_prev.w(j)) * cfg.alloc_delay < cfg.buffer(j);
        const bool alloc_ok = w.w(j) >= need;
        bits[j] = (delay_ok && alloc_ok) ? 1 : 0;
    }
    return ChannelState(std::move(bits));
}

// Minimal attack rate that breaks the delay condition of channel j when the
// previous allocation is zero: S/tau - R.
inline double force_jam_threshold(const NetworkConfig& cfg, int j) {
    if (j < 0 || j >= cfg.n())
        throw InvalidInputError("force_jam_threshold: channel out of range");
    return cfg.buffer(j) / cfg.alloc_delay - cfg.normal_flow(j);
}

// Attack admissibility: per-channel caps and total budget.
inline bool admissible(const NetworkConfig& cfg, const Vector& rate) {
    if (rate.size() != cfg.n()) return false;
    double sum = 0;
    for (int j = 0; j < cfg.n(); ++j) {
        if (rate(j) < 0 || rate(j) > cfg.attack_cap(j)) return false;
        sum += rate(j);
    }
    return sum <= cfg.attack_budget;
}

// ============================================================================
// Big-M linearization of the enabling condition
// ============================================================================
// Variables per channel, in order: w_prev, w, r, z1, z2, l. z1/z2/l are
// binary. Rows are "coef . vars + constant <= 0", strict rows "< 0". Strict
// rows additionally carry an epsilon for use inside an LP/MILP relaxation.

enum class RateBoundMode {
    PerChannelCap, // suprema from the per-channel caps (the printed constants)
    BudgetAware    // caps additionally clipped by the total budget
};

struct BigMEncoding {
    struct Row {
        std::array<double, 6> coef{}; // w_prev, w, r, z1, z2, l
        double constant = 0.0;
        bool strict = false;
    };

    double big_m = 0.0;
    double strict_eps = 0.0;
    std::vector<std::array<Row, 7>> channels;

    // Exact evaluation of the 7-row system of one channel.
    bool satisfied(int j, double w_prev, double w, double r, int z1, int z2,
                   int l) const {
        const std::array<double, 6> v{w_prev, w, r, double(z1), double(z2), double(l)};
        for (const Row& row : channels[j]) {
            double s = row.constant;
            for (int i = 0; i < 6; ++i) s += row.coef[i] * v[i];
            if (row.strict ? !(s < 0.0) : !(s <= 0.0)) return false;
        }
        return true;
    }
};

inline BigMEncoding encode_big_m(const NetworkConfig& cfg,
                                 RateBoundMode mode = RateBoundMode::PerChannelCap) {
    cfg.validate();
    const int n = cfg.n();
    const double lowest = std::numeric_limits<double>::lowest();
    double m1 = lowest, m2 = lowest, m3 = lowest, m4 = lowest;
    for (int j = 0; j < n; ++j) {
        const double cap = mode == RateBoundMode::PerChannelCap
                               ? cfg.attack_cap(j)
                               : std::min(cfg.attack_cap(j), cfg.attack_budget);
        m1 = std::max(m1, (cfg.normal_flow(j) + cap) * cfg.alloc_delay - cfg.buffer(j));
        m2 = std::max(m2, (cfg.total_bandwidth - cfg.normal_flow(j)) * cfg.alloc_delay +
                              cfg.buffer(j));
        m3 = std::max(m3, cfg.normal_flow(j) + cap);
        m4 = std::max(m4, cfg.total_bandwidth - cfg.normal_flow(j));
    }
    BigMEncoding enc;
    enc.big_m = std::max({m1, m2, m3, m4});
    enc.strict_eps = 1e-9 * enc.big_m;
    enc.channels.resize(n);

    for (int j = 0; j < n; ++j) {
        const double r0 = cfg.normal_flow(j);
        const double tau = cfg.alloc_delay;
        const double s0 = cfg.buffer(j);
        const double m = enc.big_m;
        auto& rows = enc.channels[j];
        // (R + r - w_prev)*tau - S < M(1 - z1)
        rows[0] = {{-tau, 0, tau, m, 0, 0}, r0 * tau - s0 - m, true};
        // (R + r - w_prev)*tau - S >= -M z1
        rows[1] = {{tau, 0, -tau, -m, 0, 0}, s0 - r0 * tau, false};
        // w - R - r >= -M(1 - z2)
        rows[2] = {{0, -1, 1, 0, m, 0}, r0 - m, false};
        // w - R - r < M z2
        rows[3] = {{0, 1, -1, 0, -m, 0}, -r0, true};
        // l <= z1, l <= z2, l >= z1 + z2 - 1
        rows[4] = {{0, 0, 0, -1, 0, 1}, 0.0, false};
        rows[5] = {{0, 0, 0, 0, -1, 1}, 0.0, false};
        rows[6] = {{0, 0, 0, 1, 1, -1}, -1.0, false};
    }
    return enc;
}

} // namespace crosslayer
