#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "folia/multi_index.hpp"

namespace folia {

inline constexpr double kDefaultTolerance = 1e-9;

// Sentinel valuation for a series that vanishes within tolerance: "\geq N+1".
struct Valuation {
    int value;      // smallest degree carrying a coefficient, or order+1
    bool bottom;    // true when every coefficient vanishes within tolerance

    bool operator==(const Valuation&) const = default;
};

// Real-coefficient multivariate power series truncated at total degree N.
// Dense graded storage: coefficient vector indexed by MonomialTable rank.
class TruncatedSeries {
  public:
    TruncatedSeries(int dim, int order)
        : tab_(MonomialTable::get(dim, order)), c_(tab_->size(), 0.0) {}

    explicit TruncatedSeries(std::shared_ptr<const MonomialTable> tab)
        : tab_(std::move(tab)), c_(tab_->size(), 0.0) {}

    static TruncatedSeries constant(int dim, int order, double v) {
        TruncatedSeries s(dim, order);
        s.c_[0] = v;
        return s;
    }

    // The coordinate series x_i (0-based).
    static TruncatedSeries coordinate(int dim, int order, int i) {
        TruncatedSeries s(dim, order);
        MultiIndex e(dim, 0);
        e.at(i) = 1;
        s.c_[s.tab_->rank(e)] = 1.0;
        return s;
    }

    int dim() const { return tab_->dim(); }
    int order() const { return tab_->order(); }
    int size() const { return tab_->size(); }
    const MonomialTable& table() const { return *tab_; }
    std::shared_ptr<const MonomialTable> table_ptr() const { return tab_; }

    double operator[](int rank) const { return c_[rank]; }
    double& operator[](int rank) { return c_[rank]; }

    double coeff(const MultiIndex& e) const {
        int r = tab_->rank(e);
        return r < 0 ? 0.0 : c_[r];
    }
    void set_coeff(const MultiIndex& e, double v) {
        int r = tab_->rank(e);
        if (r < 0) throw std::invalid_argument("set_coeff: degree exceeds truncation order");
        c_[r] = v;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : c_) m = std::max(m, std::abs(v));
        return m;
    }

    bool is_zero(double eps = kDefaultTolerance) const {
        return max_abs() <= eps;
    }

    TruncatedSeries& operator+=(const TruncatedSeries& o) {
        check_compatible(o);
        for (int i = 0; i < size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    TruncatedSeries& operator-=(const TruncatedSeries& o) {
        check_compatible(o);
        for (int i = 0; i < size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    TruncatedSeries& operator*=(double s) {
        for (double& v : c_) v *= s;
        return *this;
    }

    friend TruncatedSeries operator+(TruncatedSeries a, const TruncatedSeries& b) { return a += b; }
    friend TruncatedSeries operator-(TruncatedSeries a, const TruncatedSeries& b) { return a -= b; }
    friend TruncatedSeries operator*(TruncatedSeries a, double s) { return a *= s; }
    friend TruncatedSeries operator*(double s, TruncatedSeries a) { return a *= s; }
    friend TruncatedSeries operator-(TruncatedSeries a) { return a *= -1.0; }

    // Cauchy product, terms of total degree > N discarded.
    friend TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b) {
        a.check_compatible(b);
        TruncatedSeries r(a.tab_);
        const MonomialTable& tab = *a.tab_;
        const int n = a.size();
        for (int i = 0; i < n; ++i) {
            const double ai = a.c_[i];
            if (ai == 0.0) continue;
            const int rem = tab.order() - tab.degree(i);
            const int jend = tab.degree_end(rem);
            for (int j = 0; j < jend; ++j) {
                const double bj = b.c_[j];
                if (bj == 0.0) continue;
                r.c_[tab.product_rank(i, j)] += ai * bj;
            }
        }
        return r;
    }

    TruncatedSeries truncated(int new_order) const {
        if (new_order >= order()) return *this;
        TruncatedSeries r(dim(), new_order);
        for (int i = 0; i < r.size(); ++i) r.c_[i] = c_[i];
        return r;
    }

    // Re-embed into a (possibly higher) truncation order; new coefficients are zero.
    TruncatedSeries extended(int new_order) const {
        if (new_order == order()) return *this;
        if (new_order < order()) return truncated(new_order);
        TruncatedSeries r(dim(), new_order);
        for (int i = 0; i < size(); ++i) r.c_[i] = c_[i];
        return r;
    }

    TruncatedSeries homogeneous_part(int k) const {
        TruncatedSeries r(tab_);
        if (k < 0 || k > order()) return r;
        for (int i = tab_->degree_begin(k); i < tab_->degree_end(k); ++i) r.c_[i] = c_[i];
        return r;
    }

    TruncatedSeries derivative(int var) const {
        TruncatedSeries r(tab_);
        for (int i = 0; i < size(); ++i) {
            if (c_[i] == 0.0) continue;
            const MultiIndex& e = tab_->exponents(i);
            if (e[var] == 0) continue;
            MultiIndex f = e;
            f[var] -= 1;
            r.c_[tab_->rank(f)] += c_[i] * e[var];
        }
        return r;
    }

    Valuation valuation(double eps = kDefaultTolerance) const {
        const double tol = eps * std::max(1.0, max_abs());
        for (int i = 0; i < size(); ++i)
            if (std::abs(c_[i]) > tol) return {tab_->degree(i), false};
        return {order() + 1, true};
    }

    std::string str(const std::vector<std::string>& vars = {}) const;

  private:
    void check_compatible(const TruncatedSeries& o) const {
        if (tab_->dim() != o.tab_->dim() || tab_->order() != o.tab_->order())
            throw std::invalid_argument("TruncatedSeries: dimension/order mismatch");
    }

    std::shared_ptr<const MonomialTable> tab_;
    std::vector<double> c_;
};

// Equality within eps relative to the joint magnitude scale of the operands.
inline bool approx_equal(const TruncatedSeries& a, const TruncatedSeries& b,
                         double eps = kDefaultTolerance) {
    double scale = std::max(1.0, std::max(a.max_abs(), b.max_abs()));
    for (int i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > eps * scale) return false;
    return true;
}

inline std::string monomial_string(const MultiIndex& e, const std::vector<std::string>& vars) {
    std::ostringstream os;
    bool first = true;
    for (size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        if (!first) os << "*";
        os << (i < vars.size() ? vars[i] : "x" + std::to_string(i + 1));
        if (e[i] > 1) os << "^" << e[i];
        first = false;
    }
    if (first) os << "1";
    return os.str();
}

inline std::string TruncatedSeries::str(const std::vector<std::string>& vars) const {
    std::ostringstream os;
    bool first = true;
    for (int i = 0; i < size(); ++i) {
        if (c_[i] == 0.0) continue;
        if (!first) os << (c_[i] > 0 ? " + " : " - ");
        else if (c_[i] < 0) os << "-";
        double a = std::abs(c_[i]);
        const MultiIndex& e = tab_->exponents(i);
        if (a != 1.0 || total_degree(e) == 0) {
            os << a;
            if (total_degree(e) > 0) os << "*";
        }
        if (total_degree(e) > 0) os << monomial_string(e, vars);
        first = false;
    }
    if (first) os << "0";
    return os.str();
}

// f(subst_1, ..., subst_d) truncated at N.  Every subst_i must have zero
// constant term so the composition is well defined on truncations.
inline TruncatedSeries series_compose(const TruncatedSeries& f,
                                      const std::vector<TruncatedSeries>& subst) {
    if (static_cast<int>(subst.size()) != f.dim())
        throw std::invalid_argument("series_compose: substitution count != dim");
    const int N = f.order();
    for (const auto& s : subst) {
        if (s.order() != N)
            throw std::invalid_argument("series_compose: order mismatch");
        if (s[0] != 0.0)
            throw std::invalid_argument("series_compose: nonzero constant term in substitution");
    }
    const int target_dim = subst.empty() ? f.dim() : subst[0].dim();
    const MonomialTable& ftab = f.table();

    // Powers subst_i^p for p = 0..N; degree-p power has valuation >= p so
    // higher powers of a monomial with total degree > N never contribute.
    std::vector<std::vector<TruncatedSeries>> pow;
    pow.reserve(subst.size());
    for (const auto& s : subst) {
        std::vector<TruncatedSeries> ps;
        ps.push_back(TruncatedSeries::constant(target_dim, N, 1.0));
        for (int p = 1; p <= N; ++p) ps.push_back(ps.back() * s);
        pow.push_back(std::move(ps));
    }

    TruncatedSeries r(target_dim, N);
    for (int i = 0; i < f.size(); ++i) {
        if (f[i] == 0.0) continue;
        const MultiIndex& e = ftab.exponents(i);
        TruncatedSeries term = TruncatedSeries::constant(target_dim, N, f[i]);
        for (int v = 0; v < f.dim(); ++v)
            if (e[v] > 0) term = term * pow[v][e[v]];
        r += term;
    }
    return r;
}

// Truncated power series in a single variable; stand-in for germs of maps
// (R, 0) -> R expressed in an invariant.
struct ScalarJet {
    int order = 0;
    std::vector<double> coeffs;  // c_0 ... c_order

    static ScalarJet zero(int order) { return {order, std::vector<double>(order + 1, 0.0)}; }

    double operator[](int n) const { return n <= order ? coeffs[n] : 0.0; }

    // g(t) as a TruncatedSeries in one variable.
    TruncatedSeries to_series(int N) const {
        TruncatedSeries s(1, N);
        for (int n = 0; n <= std::min(order, N); ++n) s[n] = coeffs[n];
        return s;
    }

    std::string str() const {
        TruncatedSeries s = to_series(order);
        return s.str({"t"});
    }
};

// Composition of scalar jets, g(h(t)), assuming h(0) contributes via its
// constant term as well (used for the multiplicativity property of classes).
inline ScalarJet scalar_jet_compose(const ScalarJet& g, const ScalarJet& h) {
    int N = std::min(g.order, h.order);
    TruncatedSeries hs = h.to_series(N);
    hs[0] = 0.0;  // jets of germs fixing 0
    TruncatedSeries r = series_compose(g.to_series(N), {hs});
    ScalarJet out = ScalarJet::zero(N);
    for (int n = 0; n <= N; ++n) out.coeffs[n] = r[n];
    return out;
}

struct ScalarJetSolveFailure {
    int degree;       // first total degree with an unexplained residual
    double residual;  // its magnitude
};

// Solve lhs = g(invariant) for a scalar jet g, degree by degree in powers of
// the invariant.  The invariant must have positive valuation v; the degree-nv
// coefficient of g is fixed by projecting the running residual onto the
// degree-nv part of invariant^n.
inline std::optional<ScalarJet> scalar_jet_solve(const TruncatedSeries& lhs,
                                                 const TruncatedSeries& invariant,
                                                 ScalarJetSolveFailure* failure = nullptr,
                                                 double eps = kDefaultTolerance) {
    const int N = lhs.order();
    Valuation v = invariant.valuation(eps);
    if (v.bottom || v.value < 1)
        throw std::invalid_argument("scalar_jet_solve: invariant must have positive valuation");
    const int K = N / v.value;

    ScalarJet g = ScalarJet::zero(K);
    TruncatedSeries residual = lhs;
    TruncatedSeries upow = TruncatedSeries::constant(lhs.dim(), N, 1.0);
    const double scale = std::max(1.0, std::max(lhs.max_abs(), invariant.max_abs()));

    g.coeffs[0] = residual[0];
    residual[0] = 0.0;
    for (int n = 1; n <= K; ++n) {
        upow = upow * invariant;
        TruncatedSeries lead = upow.homogeneous_part(n * v.value);
        TruncatedSeries rlead = residual.homogeneous_part(n * v.value);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < lead.size(); ++i) {
            num += rlead[i] * lead[i];
            den += lead[i] * lead[i];
        }
        double gn = den > 0.0 ? num / den : 0.0;
        g.coeffs[n] = gn;
        residual -= upow * gn;
    }

    const MonomialTable& tab = lhs.table();
    for (int i = 0; i < residual.size(); ++i) {
        if (std::abs(residual[i]) > eps * scale) {
            if (failure) *failure = {tab.degree(i), std::abs(residual[i])};
            return std::nullopt;
        }
    }
    return g;
}

}  // namespace folia
