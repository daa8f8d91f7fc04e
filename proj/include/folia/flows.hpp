#pragma once

#include <cmath>
#include <stdexcept>

#include "folia/diffeo.hpp"
#include "folia/vector_field.hpp"

namespace folia {

// Time-1 flow of a formal vector field vanishing at 0, by scaling and
// squaring: halve the field until its coefficients are < 1/4, sum the
// operator Taylor series, then self-compose back up.
inline FormalDiffeo exp_field(const FormalVectorField& x, double eps = kDefaultTolerance) {
    if (!x.vanishes_at_zero(eps))
        throw std::invalid_argument("exp_field: field must vanish at 0");
    const int d = x.dim();
    const int N = x.order();

    int m = 0;
    double norm = x.max_abs();
    while (norm >= 0.25 && m < 64) {
        norm *= 0.5;
        ++m;
    }
    FormalVectorField xs = x * std::ldexp(1.0, -m);

    std::vector<TruncatedSeries> comps;
    comps.reserve(d);
    const double cutoff = eps / 10.0;
    for (int i = 0; i < d; ++i) {
        TruncatedSeries term = TruncatedSeries::coordinate(d, N, i);
        TruncatedSeries sum = term;
        for (int n = 1; n <= 50; ++n) {
            term = xs.apply(term) * (1.0 / n);
            sum += term;
            if (term.max_abs() < cutoff) break;
        }
        comps.push_back(std::move(sum));
    }
    FormalDiffeo phi{std::move(comps)};
    for (int s = 0; s < m; ++s) phi = diffeo_compose(phi, phi);
    return phi;
}

// Unique field of valuation >= 2 with exp_field(Z) = phi, for phi tangent to
// the identity.  Solved order by order; the degree-k step only needs jets of
// degree <= k, so the internal flow is evaluated at truncation order k.
inline FormalVectorField log_diffeo(const FormalDiffeo& phi, double eps = kDefaultTolerance) {
    const int d = phi.dim();
    const int N = phi.order();
    if (!phi.is_tangent_to_identity(eps))
        throw std::invalid_argument("log_diffeo: log requires tangent-to-identity input");

    FormalVectorField z(d, N);
    for (int k = 2; k <= N; ++k) {
        FormalVectorField zk = (-1.0 * z).truncated(k);
        FormalDiffeo ek = exp_field(zk, eps);
        FormalDiffeo r = diffeo_compose(phi.truncated(k), ek);
        // degree-k residual of phi o exp(-Z_{<k}) is the degree-k piece of Z
        for (int i = 0; i < d; ++i) {
            TruncatedSeries res = r.component(i) - TruncatedSeries::coordinate(d, k, i);
            TruncatedSeries part = res.homogeneous_part(k);
            z.component(i) += part.extended(N);
        }
    }
    return z;
}

}  // namespace folia
