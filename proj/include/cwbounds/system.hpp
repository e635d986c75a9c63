#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwbounds/expr.hpp"
#include "cwbounds/matrix.hpp"
#include "cwbounds/rng.hpp"

namespace cwb {

struct AffineCap {
    Mat F;  // nonnegative, k x n
    Vec w;  // nonnegative offset
};

/// Componentwise perturbation bound delta_i: R^n_{+0} -> R^{k_i}_{+0}.
struct PerturbationBound {
    enum class Kind { Constant, Affine, Expression };

    Kind kind = Kind::Constant;
    Vec w_const;                        // Constant
    AffineCap affine;                   // Affine
    std::vector<BoundExpr> components;  // Expression
    std::optional<AffineCap> declared_cap; // optional cap attached to Expression

    static PerturbationBound constant(Vec w) {
        if (w.size() && w.minCoeff() < 0.0)
            throw std::invalid_argument("constant bound must be nonnegative");
        PerturbationBound b;
        b.kind = Kind::Constant;
        b.w_const = std::move(w);
        return b;
    }
    static PerturbationBound affine_bound(Mat F, Vec w) {
        if (F.minCoeff() < 0.0 || (w.size() && w.minCoeff() < 0.0))
            throw std::invalid_argument("affine bound data must be nonnegative");
        if (F.rows() != w.size())
            throw std::invalid_argument("affine bound: F rows must match w size");
        PerturbationBound b;
        b.kind = Kind::Affine;
        b.affine = {std::move(F), std::move(w)};
        return b;
    }
    static PerturbationBound expression(std::vector<BoundExpr> comps) {
        PerturbationBound b;
        b.kind = Kind::Expression;
        b.components = std::move(comps);
        return b;
    }

    int output_dim() const {
        switch (kind) {
            case Kind::Constant: return static_cast<int>(w_const.size());
            case Kind::Affine: return static_cast<int>(affine.F.rows());
            case Kind::Expression: return static_cast<int>(components.size());
        }
        return 0;
    }
};

inline Vec eval_bound(const PerturbationBound& bound, const Vec& theta) {
    if (theta.size() && theta.minCoeff() < 0.0)
        throw std::invalid_argument("eval_bound: theta must be nonnegative");
    switch (bound.kind) {
        case PerturbationBound::Kind::Constant:
            return bound.w_const;
        case PerturbationBound::Kind::Affine:
            if (bound.affine.F.cols() != theta.size())
                throw std::invalid_argument("eval_bound: dimension mismatch");
            return bound.affine.F * theta + bound.affine.w;
        case PerturbationBound::Kind::Expression: {
            Vec out(bound.components.size());
            for (std::size_t j = 0; j < bound.components.size(); ++j) {
                if (bound.components[j].arity() > theta.size())
                    throw std::invalid_argument("eval_bound: dimension mismatch");
                out(static_cast<Eigen::Index>(j)) = bound.components[j].eval(theta);
            }
            return out;
        }
    }
    throw std::logic_error("eval_bound: bad kind");
}

struct SwitchingSystem {
    struct Mode {
        Mat A;                   // n x n
        Mat H;                   // n x k_i
        PerturbationBound bound; // output dim k_i
    };

    int n = 0;
    double tau_bar = 0.0;
    std::vector<Mode> modes;

    void validate() const {
        if (modes.empty()) throw std::invalid_argument("system needs >= 1 mode");
        if (tau_bar < 0.0) throw std::invalid_argument("tau_bar must be >= 0");
        for (const auto& m : modes) {
            if (m.A.rows() != n || m.A.cols() != n)
                throw std::invalid_argument("mode A must be n x n");
            if (m.H.rows() != n)
                throw std::invalid_argument("mode H must have n rows");
            if (m.bound.output_dim() != m.H.cols())
                throw std::invalid_argument("bound output dim must match H columns");
        }
    }
};

/// Regular grid carrying a nonnegative vector-valued function; used as the
/// discretized carrier for running-max (CNI) envelopes.
struct GridTable {
    std::vector<std::vector<double>> breakpoints; // per axis, strictly increasing
    std::vector<Vec> values;                      // row-major over the grid

    std::size_t axis_count() const { return breakpoints.size(); }

    std::size_t point_count() const {
        std::size_t c = 1;
        for (const auto& b : breakpoints) c *= b.size();
        return c;
    }

    std::size_t flat_index(const std::vector<std::size_t>& idx) const {
        std::size_t f = 0;
        for (std::size_t a = 0; a < idx.size(); ++a)
            f = f * breakpoints[a].size() + idx[a];
        return f;
    }

    void validate() const {
        for (const auto& axis : breakpoints) {
            if (axis.empty()) throw std::invalid_argument("empty breakpoint axis");
            for (std::size_t i = 1; i < axis.size(); ++i)
                if (!(axis[i] > axis[i - 1]))
                    throw std::invalid_argument("breakpoints must strictly increase");
        }
        if (values.size() != point_count())
            throw std::invalid_argument("grid value count mismatch");
    }

    /// Multilinear interpolation; clamps outside the covered box.
    Vec interpolate(const Vec& theta) const {
        const std::size_t d = axis_count();
        std::vector<std::size_t> lo(d);
        std::vector<double> frac(d);
        for (std::size_t a = 0; a < d; ++a) {
            const auto& axis = breakpoints[a];
            double x = theta(static_cast<Eigen::Index>(a));
            if (x <= axis.front()) { lo[a] = 0; frac[a] = 0.0; continue; }
            if (x >= axis.back()) { lo[a] = axis.size() - 1; frac[a] = 0.0; continue; }
            auto it = std::upper_bound(axis.begin(), axis.end(), x);
            lo[a] = static_cast<std::size_t>(it - axis.begin()) - 1;
            frac[a] = (x - axis[lo[a]]) / (axis[lo[a] + 1] - axis[lo[a]]);
        }
        Vec out = Vec::Zero(values.front().size());
        const std::size_t corners = std::size_t{1} << d;
        std::vector<std::size_t> idx(d);
        for (std::size_t c = 0; c < corners; ++c) {
            double weight = 1.0;
            for (std::size_t a = 0; a < d; ++a) {
                const bool hi = (c >> a) & 1u;
                if (hi && frac[a] == 0.0) { weight = 0.0; break; }
                idx[a] = lo[a] + (hi ? 1 : 0);
                weight *= hi ? frac[a] : 1.0 - frac[a];
            }
            if (weight > 0.0) out += weight * values[flat_index(idx)];
        }
        return out;
    }
};

/// n-dimensional running maximum of f over the grid: out[g] = max_{g' <= g} f(g').
/// The result is order-preserving (CNI) by construction and dominates f at
/// every grid point.
inline GridTable cni_envelope_grid(const std::vector<BoundExpr>& components,
                                   GridTable grid) {
    for (const auto& axis : grid.breakpoints) {
        if (axis.empty()) throw std::invalid_argument("empty breakpoint axis");
        for (std::size_t i = 1; i < axis.size(); ++i)
            if (!(axis[i] > axis[i - 1]))
                throw std::invalid_argument("breakpoints must strictly increase");
    }
    const std::size_t total = grid.point_count();
    if (total > 10'000'000) throw std::invalid_argument("cni_envelope_grid: grid too large");
    const std::size_t d = grid.axis_count();

    grid.values.assign(total, Vec());
    std::vector<std::size_t> idx(d, 0);
    Vec theta(static_cast<Eigen::Index>(d));
    for (std::size_t f = 0; f < total; ++f) {
        for (std::size_t a = 0; a < d; ++a)
            theta(static_cast<Eigen::Index>(a)) = grid.breakpoints[a][idx[a]];
        Vec v(components.size());
        for (std::size_t j = 0; j < components.size(); ++j)
            v(static_cast<Eigen::Index>(j)) = components[j].eval(theta);
        if (!v.allFinite())
            throw std::runtime_error("cni_envelope_grid: non-finite bound value");
        grid.values[f] = v;
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < grid.breakpoints[a].size()) break;
            idx[a] = 0;
        }
    }

    // Axis-by-axis prefix-max sweep.
    std::size_t stride = 1;
    for (std::size_t a = d; a-- > 0;) {
        const std::size_t len = grid.breakpoints[a].size();
        const std::size_t block = stride * len;
        for (std::size_t base = 0; base < total; base += block)
            for (std::size_t i = 1; i < len; ++i)
                for (std::size_t off = 0; off < stride; ++off) {
                    Vec& cur = grid.values[base + i * stride + off];
                    cur = cur.cwiseMax(grid.values[base + (i - 1) * stride + off]);
                }
        stride = block;
    }
    return grid;
}

struct CniVerdict {
    bool pass = true;
    bool proven = false; // true only for Constant / nonnegative-Affine bounds
    Vec witness_lo, witness_hi; // populated on failure
};

/// Order-preservation check on the nonnegative orthant: x1 <= x2 must imply
/// delta(x1) <= delta(x2). Constant and Affine variants are monotone by
/// construction; Expression variants are sampled.
inline CniVerdict cni_check(const PerturbationBound& bound, const Vec& theta_max,
                            int samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("cni_check: samples must be >= 1");
    CniVerdict v;
    if (bound.kind == PerturbationBound::Kind::Constant ||
        bound.kind == PerturbationBound::Kind::Affine) {
        v.proven = true;
        return v;
    }
    Rng rng(seed);
    const Eigen::Index n = theta_max.size();
    for (int s = 0; s < samples; ++s) {
        Vec lo(n), hi(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            double a = rng.uniform(0.0, theta_max(j));
            double b = rng.uniform(0.0, theta_max(j));
            lo(j) = std::min(a, b);
            hi(j) = std::max(a, b);
        }
        const Vec dlo = eval_bound(bound, lo);
        const Vec dhi = eval_bound(bound, hi);
        if (((dlo - dhi).array() > 1e-10).any()) {
            v.pass = false;
            v.witness_lo = lo;
            v.witness_hi = hi;
            return v;
        }
    }
    return v;
}

/// Declared/structural affine cap without sampling validation.
inline AffineCap cap_of(const PerturbationBound& bound, int n) {
    switch (bound.kind) {
        case PerturbationBound::Kind::Constant:
            return {Mat::Zero(bound.w_const.size(), n), bound.w_const};
        case PerturbationBound::Kind::Affine:
            return bound.affine;
        case PerturbationBound::Kind::Expression:
            if (!bound.declared_cap)
                throw std::invalid_argument(
                    "cap_of: expression bound has no declared cap");
            return *bound.declared_cap;
    }
    throw std::logic_error("cap_of: bad kind");
}

struct AffineOverbound {
    AffineCap cap;
    bool validated_by_sampling = false;
    std::optional<Vec> violation_witness;
};

/// Affine cap F*theta + w dominating the bound. Affine variants are returned
/// as-is, Constant maps to F = 0; Expression variants require a declared cap,
/// which is validated by sampling on [0, theta_max].
inline AffineOverbound affine_overbound(const PerturbationBound& bound,
                                        const Vec& theta_max = Vec(),
                                        int samples = 10'000,
                                        std::uint64_t seed = 0) {
    AffineOverbound out;
    switch (bound.kind) {
        case PerturbationBound::Kind::Affine:
            out.cap = bound.affine;
            return out;
        case PerturbationBound::Kind::Constant: {
            const Eigen::Index k = bound.w_const.size();
            const Eigen::Index n = theta_max.size() ? theta_max.size() : k;
            out.cap = {Mat::Zero(k, n), bound.w_const};
            return out;
        }
        case PerturbationBound::Kind::Expression: {
            if (!bound.declared_cap)
                throw std::invalid_argument(
                    "affine_overbound: expression bound has no declared cap");
            out.cap = *bound.declared_cap;
            if (theta_max.size() == 0)
                throw std::invalid_argument(
                    "affine_overbound: theta_max required to validate a declared cap");
            Rng rng(seed);
            for (int s = 0; s < samples; ++s) {
                Vec theta(theta_max.size());
                for (Eigen::Index j = 0; j < theta.size(); ++j)
                    theta(j) = rng.uniform(0.0, theta_max(j));
                const Vec lhs = eval_bound(bound, theta);
                const Vec rhs = out.cap.F * theta + out.cap.w;
                if (((lhs - rhs).array() > 1e-10).any()) {
                    out.violation_witness = theta;
                    throw std::runtime_error(
                        "affine_overbound: declared cap violated at a sampled point");
                }
            }
            out.validated_by_sampling = true;
            return out;
        }
    }
    throw std::logic_error("affine_overbound: bad kind");
}

} // namespace cwb
