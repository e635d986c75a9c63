#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cwbounds/matrix.hpp"
#include "cwbounds/rng.hpp"
#include "cwbounds/system.hpp"
#include "cwbounds/transform.hpp"

namespace cwb {

/// Right-continuous piecewise-constant mode selector.
struct SwitchingSignal {
    std::vector<double> switch_times; // strictly increasing, first entry > 0
    std::vector<int> modes;           // modes[j] active on [t_j, t_{j+1}), t_0 = 0

    int mode_at(double t) const {
        int idx = 0;
        for (std::size_t j = 0; j < switch_times.size(); ++j) {
            if (t >= switch_times[j]) idx = static_cast<int>(j) + 1;
            else break;
        }
        return modes[static_cast<std::size_t>(idx)];
    }

    void validate(int n_modes) const {
        if (modes.empty()) throw std::invalid_argument("signal needs >= 1 segment");
        if (modes.size() != switch_times.size() + 1)
            throw std::invalid_argument("signal needs one mode per segment");
        for (std::size_t j = 0; j < switch_times.size(); ++j) {
            if (switch_times[j] <= 0.0 ||
                (j && switch_times[j] <= switch_times[j - 1]))
                throw std::invalid_argument("switch times must strictly increase");
        }
        for (int m : modes)
            if (m < 0 || m >= n_modes)
                throw std::invalid_argument("signal references unknown mode");
    }

    static SwitchingSignal periodic(double period, int n_modes, double tf) {
        if (period <= 0.0) throw std::invalid_argument("period must be > 0");
        SwitchingSignal s;
        int m = 0;
        s.modes.push_back(m);
        for (double t = period; t < tf; t += period) {
            m = (m + 1) % n_modes;
            s.switch_times.push_back(t);
            s.modes.push_back(m);
        }
        return s;
    }

    static SwitchingSignal random_dwell(double dwell_min, double dwell_max,
                                        int n_modes, double tf, std::uint64_t seed) {
        if (dwell_min <= 0.0 || dwell_max < dwell_min)
            throw std::invalid_argument("invalid dwell range");
        Rng rng(seed);
        SwitchingSignal s;
        int m = static_cast<int>(rng.integer(static_cast<std::uint64_t>(n_modes)));
        s.modes.push_back(m);
        double t = rng.uniform(dwell_min, dwell_max);
        while (t < tf) {
            if (n_modes > 1) {
                int next = static_cast<int>(
                    rng.integer(static_cast<std::uint64_t>(n_modes - 1)));
                if (next >= m) ++next;
                m = next;
            }
            s.switch_times.push_back(t);
            s.modes.push_back(m);
            t += rng.uniform(dwell_min, dwell_max);
        }
        return s;
    }
};

/// Rule for realizing an admissible perturbation w_i with |w_i| <= delta_i(theta).
struct PerturbationPolicy {
    enum class Kind { Zero, RandomInBox, VertexBang, AdversarialToward };
    Kind kind = Kind::Zero;
    Vec direction;             // AdversarialToward target direction
    std::optional<CMat> V_inv; // VertexBang growth frame; falls back to identity

    static PerturbationPolicy zero() { return {}; }
    static PerturbationPolicy random_in_box() {
        PerturbationPolicy p;
        p.kind = Kind::RandomInBox;
        return p;
    }
    static PerturbationPolicy vertex_bang(std::optional<CMat> V_inverse = {}) {
        PerturbationPolicy p;
        p.kind = Kind::VertexBang;
        p.V_inv = std::move(V_inverse);
        return p;
    }
    static PerturbationPolicy adversarial_toward(Vec d) {
        PerturbationPolicy p;
        p.kind = Kind::AdversarialToward;
        p.direction = std::move(d);
        return p;
    }
};

struct Trajectory {
    double dt = 0.0;
    double tau_bar = 0.0;
    std::vector<Vec> states;        // x(t_k), k = 0..steps
    std::vector<int> step_modes;    // active mode over [t_k, t_{k+1})
    std::vector<Vec> step_w;        // realized perturbation held over the step
    std::vector<Vec> step_theta;    // delayed running max used for the step
    bool truncated = false;         // overflow abort with partial data

    double tf() const { return dt * static_cast<double>(states.size() - 1); }
};

namespace detail {

inline Vec emit_w(const PerturbationPolicy& policy, const Vec& delta,
                  const Mat& H, const Vec& x, Rng& rng) {
    const Eigen::Index k = delta.size();
    Vec w = Vec::Zero(k);
    switch (policy.kind) {
        case PerturbationPolicy::Kind::Zero:
            break;
        case PerturbationPolicy::Kind::RandomInBox:
            for (Eigen::Index j = 0; j < k; ++j)
                w(j) = rng.uniform(-delta(j), delta(j));
            break;
        case PerturbationPolicy::Kind::VertexBang: {
            // Pick the vertex pushing the current state outward: sign of the
            // inner product between each input column and the state, measured
            // in the V^{-1} frame when one is supplied.
            if (policy.V_inv) {
                const CVec y = *policy.V_inv * x.cast<std::complex<double>>();
                const CMat cols = *policy.V_inv * H.cast<std::complex<double>>();
                for (Eigen::Index j = 0; j < k; ++j) {
                    const double g = (y.adjoint() * cols.col(j)).real()(0, 0);
                    w(j) = (g >= 0.0 ? delta(j) : -delta(j));
                }
            } else {
                const Vec g = H.transpose() * x;
                for (Eigen::Index j = 0; j < k; ++j)
                    w(j) = (g(j) >= 0.0 ? delta(j) : -delta(j));
            }
            break;
        }
        case PerturbationPolicy::Kind::AdversarialToward: {
            const Vec g = H.transpose() * policy.direction;
            for (Eigen::Index j = 0; j < k; ++j)
                w(j) = (g(j) >= 0.0 ? delta(j) : -delta(j));
            break;
        }
    }
    return w;
}

} // namespace detail

/// Fixed-step RK4 integration of the switching system. The delayed quantity
/// theta(t) is the componentwise running max of |x| over a ring buffer
/// covering [t - tau_bar, t]; switches and perturbation updates are snapped
/// to the grid, which keeps the run deterministic for a fixed seed.
inline Trajectory simulate(const SwitchingSystem& system,
                           const SwitchingSignal& signal,
                           const PerturbationPolicy& policy,
                           const std::function<Vec(double)>& history, double tf,
                           double dt, std::uint64_t seed) {
    if (dt <= 0.0 || tf <= 0.0)
        throw std::invalid_argument("simulate: dt and tf must be positive");
    system.validate();
    signal.validate(static_cast<int>(system.modes.size()));

    const int steps = static_cast<int>(std::ceil(tf / dt - 1e-9));
    const int window = static_cast<int>(std::ceil(system.tau_bar / dt - 1e-9));

    Trajectory traj;
    traj.dt = dt;
    traj.tau_bar = system.tau_bar;
    traj.states.reserve(static_cast<std::size_t>(steps) + 1);

    // Ring buffer of |x| samples spanning the delay window, prefilled from
    // the history segment on [-tau_bar, 0].
    std::deque<Vec> buffer;
    for (int j = window; j >= 1; --j)
        buffer.push_back(history(-dt * j).cwiseAbs());

    Vec x = history(0.0);
    traj.states.push_back(x);
    buffer.push_back(x.cwiseAbs());

    Rng rng(seed);
    for (int k = 0; k < steps; ++k) {
        const double t = dt * k;
        const int mode_idx = signal.mode_at(t);
        const auto& mode = system.modes[static_cast<std::size_t>(mode_idx)];

        Vec theta = buffer.front();
        for (const Vec& s : buffer) theta = theta.cwiseMax(s);

        const Vec delta = eval_bound(mode.bound, theta);
        const Vec w = detail::emit_w(policy, delta, mode.H, x, rng);

        auto f = [&](const Vec& xx) -> Vec { return mode.A * xx + mode.H * w; };
        const Vec k1 = f(x);
        const Vec k2 = f(x + 0.5 * dt * k1);
        const Vec k3 = f(x + 0.5 * dt * k2);
        const Vec k4 = f(x + dt * k3);
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        traj.step_modes.push_back(mode_idx);
        traj.step_w.push_back(w);
        traj.step_theta.push_back(theta);
        traj.states.push_back(x);

        if (x.cwiseAbs().maxCoeff() > 1e12) {
            traj.truncated = true;
            return traj;
        }
        buffer.push_back(x.cwiseAbs());
        while (static_cast<int>(buffer.size()) > window + 1) buffer.pop_front();
    }
    return traj;
}

struct ContainmentReport {
    std::optional<bool> transient_pass;  // |V^{-1} x(t)| <= beta for all t
    std::optional<bool> ultimate_pass;   // trailing window inside b (1 + slack)
    std::optional<bool> init_pass;       // initial state inside admissible_init
    double first_violation_time = -1.0;
    double ultimate_slack = 0.01;
};

struct ContainmentBounds {
    std::optional<Vec> beta;
    std::optional<Vec> b;
    std::optional<Vec> admissible_init;
};

inline ContainmentReport containment(const Trajectory& traj, const CMat& V,
                                     const ContainmentBounds& bounds,
                                     double settle_fraction = 0.3) {
    const CMat Vi = V.inverse();
    ContainmentReport rep;

    std::vector<Vec> y;
    y.reserve(traj.states.size());
    for (const Vec& x : traj.states)
        y.push_back((Vi * x.cast<std::complex<double>>()).cwiseAbs());

    if (bounds.admissible_init) {
        rep.init_pass =
            ((y.front() - *bounds.admissible_init).array() <= 1e-9).all();
    }
    if (bounds.beta) {
        rep.transient_pass = true;
        for (std::size_t k = 0; k < y.size(); ++k) {
            if (((y[k] - *bounds.beta).array() > 1e-9).any()) {
                rep.transient_pass = false;
                rep.first_violation_time = traj.dt * static_cast<double>(k);
                break;
            }
        }
    }
    if (bounds.b) {
        rep.ultimate_pass = true;
        const std::size_t start = static_cast<std::size_t>(
            (1.0 - settle_fraction) * static_cast<double>(y.size() - 1));
        const Vec cap =
            bounds.b->array() * (1.0 + rep.ultimate_slack) + 1e-9;
        for (std::size_t k = start; k < y.size(); ++k) {
            if (((y[k] - cap).array() > 0.0).any()) {
                rep.ultimate_pass = false;
                if (rep.first_violation_time < 0.0)
                    rep.first_violation_time = traj.dt * static_cast<double>(k);
                break;
            }
        }
    }
    return rep;
}

struct FalsifySummary {
    int trials = 0;
    int ultimate_violations = 0;
    int transient_violations = 0;
    std::vector<std::uint64_t> violating_seeds;
};

/// Stress a bound report with randomized switching signals, perturbation
/// policies, and initial histories. Any containment violation beyond the
/// numerical slack is a red flag and carries its reproduction seed.
inline FalsifySummary falsify(const SwitchingSystem& system,
                              const TransformCandidate& candidate,
                              const ContainmentBounds& bounds, int trials,
                              std::uint64_t seed, double tf = 40.0,
                              double dt = 2e-3) {
    FalsifySummary sum;
    sum.trials = trials;
    const Eigen::Index n = candidate.Lambda.rows();

    Vec init_box;
    if (bounds.admissible_init) init_box = *bounds.admissible_init;
    else if (bounds.b) init_box = 2.0 * *bounds.b;
    else init_box = Vec::Ones(n);

    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(trial));
        const std::uint64_t trial_seed = rng.next();

        const auto signal = SwitchingSignal::random_dwell(
            0.05, 0.5, static_cast<int>(system.modes.size()), tf, trial_seed);

        PerturbationPolicy policy =
            (trial % 2 == 0) ? PerturbationPolicy::vertex_bang(candidate.V_inverse)
                             : PerturbationPolicy::random_in_box();

        // Constant history: random real direction rescaled so the transformed
        // magnitudes |V^{-1} x0| sit inside the admissible box.
        Vec x0(n);
        for (Eigen::Index j = 0; j < n; ++j) x0(j) = rng.normal();
        const Vec y0 =
            (candidate.V_inverse * x0.cast<std::complex<double>>()).cwiseAbs();
        double scale = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j)
            if (y0(j) > 0.0) scale = std::min(scale, init_box(j) / y0(j));
        if (!std::isfinite(scale)) scale = 0.0;
        x0 *= scale * rng.u01();
        auto history = [x0](double) { return x0; };

        const auto traj = simulate(system, signal, policy, history, tf, dt,
                                   trial_seed ^ 0x9e3779b97f4a7c15ull);
        const auto report = containment(traj, candidate.V, bounds);
        bool violated = false;
        if (report.ultimate_pass && !*report.ultimate_pass) {
            ++sum.ultimate_violations;
            violated = true;
        }
        if (report.transient_pass && !*report.transient_pass) {
            ++sum.transient_violations;
            violated = true;
        }
        if (violated)
            sum.violating_seeds.push_back(static_cast<std::uint64_t>(trial));
    }
    return sum;
}

} // namespace cwb
