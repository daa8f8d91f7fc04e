#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "folia/series.hpp"
#include "folia/vector_field.hpp"

namespace folia {

// Formal diffeomorphism of (R^d, 0): d components with zero constant term
// and invertible linear part.
class FormalDiffeo {
  public:
    explicit FormalDiffeo(std::vector<TruncatedSeries> comps, double eps = kDefaultTolerance)
        : comps_(std::move(comps)) {
        if (comps_.empty()) throw std::invalid_argument("FormalDiffeo: empty components");
        for (const auto& c : comps_) {
            if (c.dim() != dim() || c.order() != order())
                throw std::invalid_argument("FormalDiffeo: component mismatch");
            if (c[0] != 0.0)
                throw std::invalid_argument("FormalDiffeo: nonzero constant term");
        }
        if (std::abs(linear_part().determinant()) <= eps)
            throw std::invalid_argument("FormalDiffeo: singular linear part");
    }

    static FormalDiffeo identity(int dim, int order) {
        std::vector<TruncatedSeries> c;
        c.reserve(dim);
        for (int i = 0; i < dim; ++i) c.push_back(TruncatedSeries::coordinate(dim, order, i));
        return FormalDiffeo(std::move(c));
    }

    static FormalDiffeo linear(const Eigen::MatrixXd& a, int order) {
        const int d = static_cast<int>(a.rows());
        std::vector<TruncatedSeries> c;
        c.reserve(d);
        for (int i = 0; i < d; ++i) {
            TruncatedSeries s(d, order);
            for (int j = 0; j < d; ++j)
                s += a(i, j) * TruncatedSeries::coordinate(d, order, j);
            c.push_back(std::move(s));
        }
        return FormalDiffeo(std::move(c));
    }

    // Plane rotation by theta in d = 2.
    static FormalDiffeo rotation(double theta, int order) {
        Eigen::Matrix2d a;
        a << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
        return linear(a, order);
    }

    int dim() const { return static_cast<int>(comps_.size()); }
    int order() const { return comps_[0].order(); }
    const TruncatedSeries& component(int i) const { return comps_[i]; }
    const std::vector<TruncatedSeries>& components() const { return comps_; }

    double max_abs() const {
        double m = 0.0;
        for (const auto& c : comps_) m = std::max(m, c.max_abs());
        return m;
    }

    Eigen::MatrixXd linear_part() const {
        const int d = dim();
        Eigen::MatrixXd a(d, d);
        for (int i = 0; i < d; ++i) {
            MultiIndex e(d, 0);
            for (int j = 0; j < d; ++j) {
                e[j] = 1;
                a(i, j) = comps_[i].coeff(e);
                e[j] = 0;
            }
        }
        return a;
    }

    // Phi - id as a vector field (displacement).
    FormalVectorField displacement() const {
        std::vector<TruncatedSeries> c;
        c.reserve(dim());
        for (int i = 0; i < dim(); ++i)
            c.push_back(comps_[i] - TruncatedSeries::coordinate(dim(), order(), i));
        return FormalVectorField(std::move(c));
    }

    // Largest k with Phi - id of valuation >= k (capped at order+1).
    int tangent_to_identity_order(double eps = kDefaultTolerance) const {
        Valuation v = displacement().valuation(eps);
        return v.value;
    }

    bool is_tangent_to_identity(double eps = kDefaultTolerance) const {
        return tangent_to_identity_order(eps) >= 2;
    }

    FormalDiffeo truncated(int new_order) const {
        std::vector<TruncatedSeries> c;
        c.reserve(dim());
        for (const auto& s : comps_) c.push_back(s.truncated(new_order));
        return FormalDiffeo(std::move(c));
    }

    FormalDiffeo extended(int new_order) const {
        std::vector<TruncatedSeries> c;
        c.reserve(dim());
        for (const auto& s : comps_) c.push_back(s.extended(new_order));
        return FormalDiffeo(std::move(c));
    }

  private:
    std::vector<TruncatedSeries> comps_;
};

inline bool approx_equal(const FormalDiffeo& a, const FormalDiffeo& b,
                         double eps = kDefaultTolerance) {
    if (a.dim() != b.dim() || a.order() != b.order()) return false;
    double scale = std::max(1.0, std::max(a.max_abs(), b.max_abs()));
    for (int i = 0; i < a.dim(); ++i)
        for (int r = 0; r < a.component(i).size(); ++r)
            if (std::abs(a.component(i)[r] - b.component(i)[r]) > eps * scale) return false;
    return true;
}

// (f o g)_i = f_i(g_1, ..., g_d), truncated.
inline FormalDiffeo diffeo_compose(const FormalDiffeo& f, const FormalDiffeo& g) {
    if (f.dim() != g.dim() || f.order() != g.order())
        throw std::invalid_argument("diffeo_compose: dimension/order mismatch");
    std::vector<TruncatedSeries> c;
    c.reserve(f.dim());
    for (int i = 0; i < f.dim(); ++i)
        c.push_back(series_compose(f.component(i), g.components()));
    return FormalDiffeo(std::move(c));
}

// Inverse at truncation order: linear part inverted as a matrix, then the
// degree-k correction is read off the degree-k residual of f o g_{<k}.
inline FormalDiffeo diffeo_invert(const FormalDiffeo& f, double eps = kDefaultTolerance) {
    const int d = f.dim();
    const int N = f.order();
    Eigen::MatrixXd a = f.linear_part();
    if (std::abs(a.determinant()) <= eps)
        throw std::invalid_argument("diffeo_invert: singular linear part");
    Eigen::MatrixXd ainv = a.inverse();

    std::vector<TruncatedSeries> g = FormalDiffeo::linear(ainv, N).components();
    for (int k = 2; k <= N; ++k) {
        FormalDiffeo gk{std::vector<TruncatedSeries>(g)};
        FormalDiffeo h = diffeo_compose(f, gk);
        // residual = f o g - id; its degree-k part maps through A^{-1} to the correction
        std::vector<TruncatedSeries> rk;
        rk.reserve(d);
        for (int i = 0; i < d; ++i) {
            TruncatedSeries r = h.component(i) - TruncatedSeries::coordinate(d, N, i);
            rk.push_back(r.homogeneous_part(k));
        }
        for (int i = 0; i < d; ++i) {
            TruncatedSeries corr(d, N);
            for (int j = 0; j < d; ++j) corr += ainv(i, j) * rk[j];
            g[i] -= corr;
        }
    }
    return FormalDiffeo(std::move(g));
}

// Pushforward Y with Y(p) = (DPhi . X)(Phi^{-1}(p)), componentwise at jet level.
inline FormalVectorField pushforward(const FormalDiffeo& phi, const FormalVectorField& x,
                                     double eps = kDefaultTolerance) {
    if (phi.dim() != x.dim() || phi.order() != x.order())
        throw std::invalid_argument("pushforward: dimension/order mismatch");
    FormalDiffeo phi_inv = diffeo_invert(phi, eps);
    std::vector<TruncatedSeries> c;
    c.reserve(x.dim());
    for (int i = 0; i < x.dim(); ++i) {
        TruncatedSeries w = x.apply(phi.component(i));  // (DPhi . X)_i
        c.push_back(series_compose(w, phi_inv.components()));
    }
    return FormalVectorField(std::move(c));
}

}  // namespace folia
