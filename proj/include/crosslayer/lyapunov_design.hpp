#pragma once

// The Lyapunov design produced by the offline synthesis: per-subsystem rates,
// the cyclic list of Lyapunov matrices (p[0] == p[s] by convention), default
// controller gains, and the slack matrices they were recovered from.

#include <vector>

#include "crosslayer/errors.hpp"
#include "crosslayer/linalg.hpp"

namespace crosslayer {

struct LyapunovDesign {
    Vector alpha;              // per-subsystem attack-free rates, size s
    std::vector<SymMatrix> p;  // size s+1, p[0] == p[s]
    std::vector<Matrix> k_default; // size s, n_u x n
    std::vector<Matrix> g;     // size s (empty when the design was loaded directly)
    std::vector<Matrix> y;     // size s

    int subsystem_count() const { return static_cast<int>(k_default.size()); }

    // Lyapunov matrices entering subsystem i (1-based): interpolation runs
    // from p[i-1] to p[i].
    const SymMatrix& p_prev(int i) const { return p[i - 1]; }
    const SymMatrix& p_cur(int i) const { return p[i]; }

    void validate_shapes(int n, int nu) const {
        const int s = subsystem_count();
        if (alpha.size() != s || static_cast<int>(p.size()) != s + 1)
            throw InvalidInputError("LyapunovDesign: inconsistent sizes");
        if ((p.front().m() - p.back().m()).cwiseAbs().maxCoeff() > 1e-9)
            throw InvalidInputError("LyapunovDesign: p[0] must equal p[s]");
        for (const auto& pi : p)
            if (pi.dim() != n) throw InvalidInputError("LyapunovDesign: bad P dimension");
        for (const auto& ki : k_default)
            if (ki.rows() != nu || ki.cols() != n)
                throw InvalidInputError("LyapunovDesign: bad gain dimension");
    }
};

} // namespace crosslayer
