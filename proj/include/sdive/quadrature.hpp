// Adaptive composite Simpson quadrature shared by every integral in the
// library, plus the normal tail quantile used to truncate infinite domains.
#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "sdive/common.hpp"

namespace sdive {

struct QuadratureSpec {
    double abs_tol = 1e-9;
    double rel_tol = 1e-8;
    double truncation_mass = 1e-10;  // tail mass excluded per side
    int max_subdivisions = 1 << 16;

    void validate() const {
        if (!(abs_tol > 0.0 && abs_tol < 1.0) || !(rel_tol > 0.0 && rel_tol < 1.0) ||
            !(truncation_mass > 0.0 && truncation_mass < 1.0) || max_subdivisions < 1)
            throw InvalidInput("invalid quadrature spec");
    }

    // Tightened spec for the inner integral of nested quadratures.
    QuadratureSpec inner() const {
        QuadratureSpec q = *this;
        q.abs_tol = std::max(abs_tol * 1e-2, 1e-13);
        q.rel_tol = std::max(rel_tol * 1e-2, 1e-12);
        return q;
    }
};

// z such that the upper normal tail beyond z carries `mass`.
inline double normal_tail_z(double mass) {
    if (!(mass > 0.0 && mass < 0.5)) throw InvalidInput("tail mass must be in (0, 0.5)");
    double lo = 0.0, hi = 60.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double tail = 0.5 * std::erfc(mid / std::sqrt(2.0));
        (tail > mass ? lo : hi) = mid;
        if (hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

namespace detail {

inline constexpr int kMaxQuadComponents = 8;

struct QuadVec {
    int n = 0;
    std::array<double, kMaxQuadComponents> v{};

    void zero(int k) {
        n = k;
        v.fill(0.0);
    }
    QuadVec& operator+=(const QuadVec& o) {
        for (int i = 0; i < n; ++i) v[i] += o.v[i];
        return *this;
    }
};

template <class F>
struct PanelV {
    double a, b;
    QuadVec fa, fm, fb;  // endpoint and midpoint samples
    QuadVec coarse;      // Simpson over [a,b]
};

}  // namespace detail

// Initial panel edges: a uniform subdivision of [a,b] merged with any hint
// points falling inside. Hints mark features (kernel bumps at data points)
// that a coarse uniform start would step over.
inline std::vector<double> initial_panel_edges(double a, double b, int uniform_panels,
                                               std::span<const double> hints) {
    std::vector<double> edges;
    const int panels = std::max(1, uniform_panels);
    edges.reserve(panels + hints.size() + 1);
    for (int i = 0; i <= panels; ++i)
        edges.push_back(a + (b - a) * static_cast<double>(i) / panels);
    for (double x : hints)
        if (x > a && x < b) edges.push_back(x);
    std::sort(edges.begin(), edges.end());
    const double min_gap = (b - a) * 1e-12;
    std::vector<double> out;
    out.reserve(edges.size());
    out.push_back(a);
    for (double e : edges)
        if (e - out.back() > min_gap) out.push_back(e);
    if (out.back() != b) out.back() = b;
    return out;
}

// Vector-valued adaptive Simpson on [a,b]; k components, caller-provided
// integrand writes into out[0..k). Error control is on the max component.
template <class F>
Vector integrate_vec(F&& f, double a, double b, int k, const QuadratureSpec& spec,
                     int initial_panels = 16, std::span<const double> hints = {}) {
    using detail::QuadVec;
    if (k > detail::kMaxQuadComponents) throw InvalidInput("too many quadrature components");
    if (!(b > a)) {
        if (b == a) return Vector(k, 0.0);
        throw InvalidInput("inverted quadrature interval");
    }

    auto eval = [&](double x) {
        QuadVec q;
        q.zero(k);
        f(x, q.v.data());
        for (int i = 0; i < k; ++i)
            if (!std::isfinite(q.v[i])) throw NumericError("non-finite integrand value");
        return q;
    };
    auto simpson = [&](const QuadVec& fa, const QuadVec& fm, const QuadVec& fb, double h) {
        QuadVec s;
        s.zero(k);
        for (int i = 0; i < k; ++i) s.v[i] = (h / 6.0) * (fa.v[i] + 4.0 * fm.v[i] + fb.v[i]);
        return s;
    };

    struct Node {
        double a, b;
        QuadVec fa, fm, fb, coarse;
        double tol;
    };

    const std::vector<double> edges = initial_panel_edges(a, b, initial_panels, hints);
    const size_t panels = edges.size() - 1;
    std::vector<Node> stack;
    stack.reserve(panels + 64);
    for (size_t p = 0; p < panels; ++p) {
        Node nd;
        nd.a = edges[p];
        nd.b = edges[p + 1];
        nd.fa = eval(nd.a);
        nd.fb = eval(nd.b);
        nd.fm = eval(0.5 * (nd.a + nd.b));
        nd.coarse = simpson(nd.fa, nd.fm, nd.fb, nd.b - nd.a);
        nd.tol = spec.abs_tol / static_cast<double>(panels);
        stack.push_back(std::move(nd));
    }

    QuadVec total;
    total.zero(k);
    double running_scale = 0.0;
    int used = panels;
    double worst_panel = 0.0;

    while (!stack.empty()) {
        Node nd = std::move(stack.back());
        stack.pop_back();
        const double m = 0.5 * (nd.a + nd.b);
        const QuadVec fl = eval(0.5 * (nd.a + m));
        const QuadVec fr = eval(0.5 * (m + nd.b));
        const QuadVec left = simpson(nd.fa, fl, nd.fm, m - nd.a);
        const QuadVec right = simpson(nd.fm, fr, nd.fb, nd.b - m);

        double err = 0.0, mag = 0.0;
        for (int i = 0; i < k; ++i) {
            err = std::max(err, std::abs(left.v[i] + right.v[i] - nd.coarse.v[i]) / 15.0);
            mag = std::max(mag, std::abs(left.v[i] + right.v[i]));
        }
        const double allow = std::max(nd.tol, spec.rel_tol * std::max(mag, running_scale));
        if (err <= allow || (nd.b - nd.a) < 1e-14 * (b - a)) {
            QuadVec refined;
            refined.zero(k);
            for (int i = 0; i < k; ++i)
                refined.v[i] = left.v[i] + right.v[i] +
                               (left.v[i] + right.v[i] - nd.coarse.v[i]) / 15.0;
            total += refined;
            running_scale = std::max(running_scale, mag);
            continue;
        }
        used += 2;
        worst_panel = std::max(worst_panel, err);
        if (used > spec.max_subdivisions)
            throw NumericError("quadrature did not converge within subdivision budget",
                               worst_panel);
        stack.push_back({nd.a, m, nd.fa, fl, nd.fm, left, 0.5 * nd.tol});
        stack.push_back({m, nd.b, nd.fm, fr, nd.fb, right, 0.5 * nd.tol});
    }
    return Vector(total.v.begin(), total.v.begin() + k);
}

template <class F>
double integrate(F&& f, double a, double b, const QuadratureSpec& spec,
                 int initial_panels = 16, std::span<const double> hints = {}) {
    auto wrapped = [&](double x, double* out) { out[0] = f(x); };
    return integrate_vec(wrapped, a, b, 1, spec, initial_panels, hints)[0];
}

template <class F>
double integrate(F&& f, const Interval& iv, const QuadratureSpec& spec,
                 int initial_panels = 16, std::span<const double> hints = {}) {
    return integrate(std::forward<F>(f), iv.lo, iv.hi, spec, initial_panels, hints);
}

// Widens [lo,hi] geometrically until the integrand has decayed at both ends.
// Guards integrands whose analytic support outgrows the first guess.
template <class F>
Interval widen_until_decayed(F&& f, Interval iv, double decay_tol, int max_doublings = 8) {
    for (int it = 0; it < max_doublings; ++it) {
        const bool lo_ok = std::abs(f(iv.lo)) <= decay_tol;
        const bool hi_ok = std::abs(f(iv.hi)) <= decay_tol;
        if (lo_ok && hi_ok) return iv;
        const double w = iv.width();
        if (!lo_ok) iv.lo -= 0.5 * w;
        if (!hi_ok) iv.hi += 0.5 * w;
    }
    return iv;
}

}  // namespace sdive
