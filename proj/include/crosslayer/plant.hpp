#pragma once

// The multi-channel periodic piecewise linear plant: cyclic mode schedule
// with fixed dwell-times, closed-loop stepping through a channel mask, and
// the time-varying Lyapunov evaluation.

#include <vector>

#include "crosslayer/channel_net.hpp"
#include "crosslayer/errors.hpp"
#include "crosslayer/linalg.hpp"
#include "crosslayer/lyapunov_design.hpp"

namespace crosslayer {

struct Subsystem {
    Matrix a; // n x n
    Matrix b; // n x n_u
    int dwell = 0;
};

struct ModePhase {
    int mode = 0;  // 1-based subsystem index
    int phase = 0; // 0-based offset into the dwell
};

class PplsSystem {
public:
    explicit PplsSystem(std::vector<Subsystem> subs) : subs_(std::move(subs)) {
        if (subs_.empty()) throw InvalidInputError("PplsSystem: needs >= 1 subsystem");
        n_ = static_cast<int>(subs_[0].a.rows());
        nu_ = static_cast<int>(subs_[0].b.cols());
        period_ = 0;
        offsets_.push_back(0); // k_0 = 0
        for (const auto& s : subs_) {
            if (s.a.rows() != n_ || s.a.cols() != n_)
                throw InvalidInputError("PplsSystem: A must be n x n");
            if (s.b.rows() != n_ || s.b.cols() != nu_)
                throw InvalidInputError("PplsSystem: B must be n x n_u");
            if (!s.a.allFinite() || !s.b.allFinite())
                throw InvalidInputError("PplsSystem: non-finite entries");
            if (s.dwell <= 0) throw InvalidInputError("PplsSystem: dwell must be >= 1");
            period_ += s.dwell;
            offsets_.push_back(period_);
        }
    }

    int n() const { return n_; }
    int nu() const { return nu_; }
    int period() const { return period_; }
    int subsystem_count() const { return static_cast<int>(subs_.size()); }
    const Subsystem& sub(int i) const { return subs_[i - 1]; } // 1-based
    int switch_offset(int i) const { return offsets_[i]; }     // k_i, offsets_[0] = 0

    ModePhase mode_at(long k) const {
        if (k < 0) throw InvalidInputError("mode_at: negative time index");
        const int w = static_cast<int>(k % period_);
        for (int i = 1; i <= subsystem_count(); ++i)
            if (w < offsets_[i]) return {i, w - offsets_[i - 1]};
        throw std::logic_error("mode_at: schedule walk failed");
    }

private:
    std::vector<Subsystem> subs_;
    std::vector<int> offsets_;
    int n_ = 0, nu_ = 0, period_ = 0;
};

struct SystemState {
    long k = 0;
    Vector x;
};

// One closed-loop step: x' = (A_i + B_i K diag(L)) x, time advances by one.
inline SystemState step(const PplsSystem& sys, const SystemState& st, const Matrix& gain,
                        const ChannelState& l) {
    if (gain.rows() != sys.nu() || gain.cols() != sys.n())
        throw InvalidInputError("step: gain must be n_u x n");
    if (l.n() != sys.n()) throw InvalidInputError("step: channel state must have n entries");
    if (st.x.size() != sys.n()) throw InvalidInputError("step: state must have n entries");
    const auto& s = sys.sub(sys.mode_at(st.k).mode);
    Vector masked = st.x;
    for (int j = 0; j < sys.n(); ++j) masked(j) *= l.l[j];
    return {st.k + 1, s.a * st.x + s.b * (gain * masked)};
}

// Interpolated Lyapunov matrix for time k: P_{i-1} + (phase/T_i)(P_i - P_{i-1}).
inline Matrix lyapunov_matrix_at(const PplsSystem& sys, const LyapunovDesign& design,
                                 long k) {
    const ModePhase mp = sys.mode_at(k);
    const double w = static_cast<double>(mp.phase) / sys.sub(mp.mode).dwell;
    return (1.0 - w) * design.p_prev(mp.mode).m() + w * design.p_cur(mp.mode).m();
}

inline double lyapunov_value(const PplsSystem& sys, const LyapunovDesign& design,
                             const SystemState& st) {
    return st.x.dot(lyapunov_matrix_at(sys, design, st.k) * st.x);
}

} // namespace crosslayer
