#pragma once

// Test-only oracles, independent of the library's flow/exponential code:
// a minimal univariate jet type with its own arithmetic, an RK4 integrator
// for jet-valued ODEs dt/ds = p(t), and small helpers used to freeze
// expected values.

#include <array>
#include <cmath>
#include <vector>

namespace oracle {

// Univariate polynomial jet a_0 + a_1 t + ... + a_N t^N with plain vector
// arithmetic; deliberately separate from folia::TruncatedSeries.
struct Jet1 {
    std::vector<double> a;

    explicit Jet1(int order) : a(order + 1, 0.0) {}
    int order() const { return static_cast<int>(a.size()) - 1; }

    static Jet1 var(int order) {
        Jet1 j(order);
        j.a[1] = 1.0;
        return j;
    }

    Jet1 operator+(const Jet1& o) const {
        Jet1 r(order());
        for (size_t i = 0; i < a.size(); ++i) r.a[i] = a[i] + o.a[i];
        return r;
    }
    Jet1 operator*(double s) const {
        Jet1 r(order());
        for (size_t i = 0; i < a.size(); ++i) r.a[i] = a[i] * s;
        return r;
    }
    Jet1 operator*(const Jet1& o) const {
        Jet1 r(order());
        for (int i = 0; i <= order(); ++i) {
            if (a[i] == 0.0) continue;
            for (int j = 0; i + j <= order(); ++j) r.a[i + j] += a[i] * o.a[j];
        }
        return r;
    }
};

// Evaluate a polynomial p (coefficients in t) on a jet.
inline Jet1 poly_on_jet(const std::vector<double>& p, const Jet1& x) {
    Jet1 r(x.order());
    Jet1 pw(x.order());
    pw.a[0] = 1.0;
    for (size_t k = 0; k < p.size(); ++k) {
        if (p[k] != 0.0) r = r + pw * p[k];
        if (k + 1 < p.size()) pw = pw * x;
    }
    return r;
}

// Jet of the time-s flow of dt/ds = p(t) by RK4 on the jet ODE, starting at
// the identity jet.  Step count chosen so the local error is far below the
// comparison tolerances used in the tests.
inline Jet1 flow_jet(const std::vector<double>& p, double s, int order, int steps = 4096) {
    Jet1 x = Jet1::var(order);
    const double h = s / steps;
    for (int i = 0; i < steps; ++i) {
        Jet1 k1 = poly_on_jet(p, x);
        Jet1 k2 = poly_on_jet(p, x + k1 * (h / 2));
        Jet1 k3 = poly_on_jet(p, x + k2 * (h / 2));
        Jet1 k4 = poly_on_jet(p, x + k3 * h);
        x = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    return x;
}

// 2x2 rotation matrix entries for angle theta.
inline std::array<double, 4> rotation2(double theta) {
    return {std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta)};
}

}  // namespace oracle
