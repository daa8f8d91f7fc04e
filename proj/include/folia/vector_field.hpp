#pragma once

#include <stdexcept>
#include <vector>

#include "folia/series.hpp"

namespace folia {

// Formal vector field X = sum_i f_i d/dx_i with truncated-series components.
class FormalVectorField {
  public:
    FormalVectorField(int dim, int order)
        : comps_(dim, TruncatedSeries(dim, order)) {}

    explicit FormalVectorField(std::vector<TruncatedSeries> comps) : comps_(std::move(comps)) {
        if (comps_.empty()) throw std::invalid_argument("FormalVectorField: empty components");
        for (const auto& c : comps_)
            if (c.dim() != dim() || c.order() != order())
                throw std::invalid_argument("FormalVectorField: component mismatch");
    }

    int dim() const { return static_cast<int>(comps_.size()); }
    int order() const { return comps_[0].order(); }

    const TruncatedSeries& component(int i) const { return comps_[i]; }
    TruncatedSeries& component(int i) { return comps_[i]; }
    const std::vector<TruncatedSeries>& components() const { return comps_; }

    double max_abs() const {
        double m = 0.0;
        for (const auto& c : comps_) m = std::max(m, c.max_abs());
        return m;
    }

    bool is_zero(double eps = kDefaultTolerance) const { return max_abs() <= eps; }

    Valuation valuation(double eps = kDefaultTolerance) const {
        const double tol = eps * std::max(1.0, max_abs());
        int best = order() + 1;
        bool bottom = true;
        for (const auto& c : comps_) {
            for (int i = 0; i < c.size(); ++i) {
                if (std::abs(c[i]) > tol) {
                    best = std::min(best, c.table().degree(i));
                    bottom = false;
                    break;
                }
            }
        }
        return {best, bottom};
    }

    bool vanishes_at_zero(double eps = kDefaultTolerance) const {
        const double tol = eps * std::max(1.0, max_abs());
        for (const auto& c : comps_)
            if (std::abs(c[0]) > tol) return false;
        return true;
    }

    bool order_at_least(int k, double eps = kDefaultTolerance) const {
        Valuation v = valuation(eps);
        return v.bottom || v.value >= k;
    }

    // The derivation X[F] = sum_i f_i dF/dx_i.
    TruncatedSeries apply(const TruncatedSeries& f) const {
        TruncatedSeries r(f.dim(), f.order());
        for (int i = 0; i < dim(); ++i) r += comps_[i] * f.derivative(i);
        return r;
    }

    FormalVectorField homogeneous_part(int k) const {
        std::vector<TruncatedSeries> c;
        c.reserve(dim());
        for (const auto& s : comps_) c.push_back(s.homogeneous_part(k));
        return FormalVectorField(std::move(c));
    }

    FormalVectorField truncated(int new_order) const {
        std::vector<TruncatedSeries> c;
        c.reserve(dim());
        for (const auto& s : comps_) c.push_back(s.truncated(new_order));
        return FormalVectorField(std::move(c));
    }

    FormalVectorField extended(int new_order) const {
        std::vector<TruncatedSeries> c;
        c.reserve(dim());
        for (const auto& s : comps_) c.push_back(s.extended(new_order));
        return FormalVectorField(std::move(c));
    }

    // Matrix of the degree-1 part, row i = gradient of component i at 0.
    std::vector<std::vector<double>> linear_part() const {
        std::vector<std::vector<double>> m(dim(), std::vector<double>(dim(), 0.0));
        for (int i = 0; i < dim(); ++i) {
            MultiIndex e(dim(), 0);
            for (int j = 0; j < dim(); ++j) {
                e[j] = 1;
                m[i][j] = comps_[i].coeff(e);
                e[j] = 0;
            }
        }
        return m;
    }

    FormalVectorField& operator+=(const FormalVectorField& o) {
        check_compatible(o);
        for (int i = 0; i < dim(); ++i) comps_[i] += o.comps_[i];
        return *this;
    }
    FormalVectorField& operator-=(const FormalVectorField& o) {
        check_compatible(o);
        for (int i = 0; i < dim(); ++i) comps_[i] -= o.comps_[i];
        return *this;
    }
    FormalVectorField& operator*=(double s) {
        for (auto& c : comps_) c *= s;
        return *this;
    }

    friend FormalVectorField operator+(FormalVectorField a, const FormalVectorField& b) { return a += b; }
    friend FormalVectorField operator-(FormalVectorField a, const FormalVectorField& b) { return a -= b; }
    friend FormalVectorField operator*(FormalVectorField a, double s) { return a *= s; }
    friend FormalVectorField operator*(double s, FormalVectorField a) { return a *= s; }
    friend FormalVectorField operator-(FormalVectorField a) { return a *= -1.0; }

    // f * X with a scalar series f.
    friend FormalVectorField operator*(const TruncatedSeries& f, const FormalVectorField& x) {
        std::vector<TruncatedSeries> c;
        c.reserve(x.dim());
        for (const auto& s : x.comps_) c.push_back(f * s);
        return FormalVectorField(std::move(c));
    }

  private:
    void check_compatible(const FormalVectorField& o) const {
        if (dim() != o.dim() || order() != o.order())
            throw std::invalid_argument("FormalVectorField: dimension/order mismatch");
    }

    std::vector<TruncatedSeries> comps_;
};

inline bool approx_equal(const FormalVectorField& a, const FormalVectorField& b,
                         double eps = kDefaultTolerance) {
    if (a.dim() != b.dim() || a.order() != b.order()) return false;
    double scale = std::max(1.0, std::max(a.max_abs(), b.max_abs()));
    for (int i = 0; i < a.dim(); ++i)
        for (int r = 0; r < a.component(i).size(); ++r)
            if (std::abs(a.component(i)[r] - b.component(i)[r]) > eps * scale) return false;
    return true;
}

// [X, Y]_i = sum_j (X_j dY_i/dx_j - Y_j dX_i/dx_j), truncated.
inline FormalVectorField lie_bracket(const FormalVectorField& x, const FormalVectorField& y) {
    if (x.dim() != y.dim() || x.order() != y.order())
        throw std::invalid_argument("lie_bracket: dimension/order mismatch");
    std::vector<TruncatedSeries> c;
    c.reserve(x.dim());
    for (int i = 0; i < x.dim(); ++i)
        c.push_back(x.apply(y.component(i)) - y.apply(x.component(i)));
    return FormalVectorField(std::move(c));
}

}  // namespace folia
