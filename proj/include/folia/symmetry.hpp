#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "folia/flows.hpp"
#include "folia/foliation_module.hpp"

namespace folia {

struct SymmetryReport {
    bool symmetric = false;
    // max membership residual (or -1 for pass) per generator, forward then inverse
    std::vector<double> forward_residuals;
    std::vector<double> inverse_residuals;
};

// Phi is a symmetry iff the pushforward of every generator lies in the module,
// for Phi and for Phi^{-1} (two-sided so equality holds, not just inclusion).
inline SymmetryReport is_symmetry(const FoliationModule& F, const FormalDiffeo& phi) {
    SymmetryReport rep;
    rep.symmetric = true;
    const FormalDiffeo inv = diffeo_invert(phi);
    for (const FormalDiffeo* d : {&phi, &inv}) {
        for (const auto& g : F.generators()) {
            auto res = F.membership(pushforward(*d, g));
            double r = membership_ok(res) ? -1.0 : std::get<MembershipFailure>(res).residual_norm;
            if (r >= 0.0) rep.symmetric = false;
            (d == &phi ? rep.forward_residuals : rep.inverse_residuals).push_back(r);
        }
    }
    return rep;
}

inline bool is_infinitesimal_symmetry(const FoliationModule& F, const FormalVectorField& x) {
    if (!x.vanishes_at_zero(F.tolerance())) return false;
    for (const auto& g : F.generators())
        if (!membership_ok(F.membership(lie_bracket(x, g)))) return false;
    return true;
}

// Certificate that Phi = exp(Z_1) o ... o exp(Z_r) with every Z_i in the module.
struct InnerCertificate {
    std::vector<FormalVectorField> factors;
    std::vector<MembershipCertificate> memberships;
    double recomposition_error = 0.0;
};

struct InnerFailure {
    enum class Stage { Linear, Residual } stage;
    std::string reason;
    int degree = -1;  // obstruction degree for stage-2 failures
};

using InnerResult = std::variant<InnerCertificate, InnerFailure>;

inline bool inner_ok(const InnerResult& r) { return std::holds_alternative<InnerCertificate>(r); }

namespace detail {

// Real matrix logarithm via the dense functional calculus; empty when no
// real logarithm is found.
inline std::optional<Eigen::MatrixXd> real_matrix_log(const Eigen::MatrixXd& a) {
    const int d = static_cast<int>(a.rows());
    if (d == 1) {
        if (a(0, 0) <= 0.0) return std::nullopt;
        Eigen::MatrixXd l(1, 1);
        l(0, 0) = std::log(a(0, 0));
        return l;
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) return std::nullopt;
    for (int i = 0; i < d; ++i) {
        std::complex<double> ev = es.eigenvalues()(i);
        if (ev.real() <= 0.0 && std::abs(ev.imag()) < 1e-12 * std::max(1.0, std::abs(ev.real())))
            return std::nullopt;  // eigenvalue on the closed negative real axis
    }
    Eigen::MatrixXd l = a.log();
    if (!l.allFinite()) return std::nullopt;
    if (((l.exp()) - a).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, a.cwiseAbs().maxCoeff()))
        return std::nullopt;
    return l;
}

// Least-squares combination of generator linear parts realizing L; empty when
// L is not in their span.
inline std::optional<Eigen::VectorXd> generator_combination(const FoliationModule& F,
                                                            const Eigen::MatrixXd& L) {
    const int d = F.dim();
    const int m = static_cast<int>(F.generators().size());
    if (m == 0) return L.cwiseAbs().maxCoeff() <= 1e-9 ? std::optional<Eigen::VectorXd>(
                                                             Eigen::VectorXd::Zero(0))
                                                       : std::nullopt;
    Eigen::MatrixXd G(d * d, m);
    for (int j = 0; j < m; ++j) {
        auto lp = F.generators()[j].linear_part();
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) G(i * d + k, j) = lp[i][k];
    }
    Eigen::VectorXd b(d * d);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) b(i * d + k) = L(i, k);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);
    Eigen::VectorXd c = cod.solve(b);
    if ((G * c - b).cwiseAbs().maxCoeff() > 1e-7 * std::max(1.0, b.cwiseAbs().maxCoeff()))
        return std::nullopt;
    return c;
}

// Normalized rotation-type generator of a 1-dim linear algebra: Bhat with
// Bhat^2 = -I, or empty when the algebra is not of rotation type.
inline std::optional<Eigen::MatrixXd> rotation_generator(const std::vector<Eigen::MatrixXd>& alg) {
    if (alg.size() != 1) return std::nullopt;
    const Eigen::MatrixXd& b = alg[0];
    double s2 = -(b * b).trace() / b.rows();
    if (s2 <= 0.0) return std::nullopt;
    Eigen::MatrixXd bhat = b / std::sqrt(s2);
    Eigen::MatrixXd shouldBeMinusI = bhat * bhat + Eigen::MatrixXd::Identity(b.rows(), b.cols());
    if (shouldBeMinusI.cwiseAbs().maxCoeff() > 1e-8) return std::nullopt;
    return bhat;
}

}  // namespace detail

// Two-stage certificate search for membership in Inner(T_0).  Sound but
// incomplete: stage 1 factors the linear part through exp of the linear-part
// algebra (enumerating the discrete angle family for rotation algebras, and
// splitting via polar decomposition for the full gl_d algebra); stage 2
// takes the log of the tangent-to-identity remainder and asks for module
// membership.
inline InnerResult inner_certificate(const FoliationModule& F, const FormalDiffeo& phi,
                                     int angle_window = 3) {
    const int d = F.dim();
    const int N = F.order();
    const double eps = F.tolerance();
    Eigen::MatrixXd A = phi.linear_part();
    auto alg = F.linear_part_algebra();

    // Each candidate is a list of linear-part matrices whose exponentials
    // compose to A; tried in order.
    std::vector<std::vector<Eigen::MatrixXd>> candidates;
    const bool a_is_id =
        (A - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-8;

    auto bhat = detail::rotation_generator(alg);
    if (a_is_id) candidates.push_back({});
    if (bhat) {
        double c = A.trace() / d;
        double s = ((*bhat).transpose() * A).trace() / d;
        Eigen::MatrixXd model = c * Eigen::MatrixXd::Identity(d, d) + s * (*bhat);
        if ((A - model).cwiseAbs().maxCoeff() <= 1e-7 * std::max(1.0, A.cwiseAbs().maxCoeff()) &&
            std::abs(c * c + s * s - 1.0) <= 1e-7) {
            double theta0 = std::atan2(s, c);
            for (int absn = 0; absn <= angle_window; ++absn) {
                for (int sign : {1, -1}) {
                    if (absn == 0 && sign < 0) continue;
                    double theta = theta0 + 2.0 * M_PI * absn * sign;
                    if (a_is_id && std::abs(theta) < 1e-12) continue;  // already have []
                    candidates.push_back({theta * (*bhat)});
                }
            }
        }
    }
    if (candidates.empty() || (!a_is_id && !bhat)) {
        if (auto L = detail::real_matrix_log(A)) {
            if (detail::generator_combination(F, *L)) candidates.push_back({*L});
        }
        // polar fallback A = Q S for the full linear algebra
        if (static_cast<int>(alg.size()) == d * d && A.determinant() > 0.0) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
            Eigen::MatrixXd Q = svd.matrixU() * svd.matrixV().transpose();
            Eigen::MatrixXd S = svd.matrixV() * svd.singularValues().asDiagonal() *
                                svd.matrixV().transpose();
            std::optional<Eigen::MatrixXd> K;
            if (d == 2) {
                double theta = std::atan2(Q(1, 0), Q(0, 0));
                Eigen::MatrixXd j(2, 2);
                j << 0, -1, 1, 0;
                K = theta * j;
            } else {
                K = detail::real_matrix_log(Q);
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(S);
            if (K && se.info() == Eigen::Success && se.eigenvalues().minCoeff() > 0.0) {
                Eigen::MatrixXd Ms = se.eigenvectors() *
                                     se.eigenvalues().array().log().matrix().asDiagonal() *
                                     se.eigenvectors().transpose();
                candidates.push_back({*K, Ms});
            }
        }
    }

    if (candidates.empty())
        return InnerFailure{InnerFailure::Stage::Linear,
                            "linear part not in exp of linear algebra"};

    std::optional<InnerFailure> best_failure;
    for (const auto& cand : candidates) {
        std::vector<FormalVectorField> factors;
        std::vector<MembershipCertificate> certs;
        bool viable = true;
        FormalDiffeo rest = phi;
        for (const auto& L : cand) {
            auto c = detail::generator_combination(F, L);
            if (!c) {
                viable = false;
                break;
            }
            FormalVectorField z(d, N);
            for (int j = 0; j < c->size(); ++j) z += (*c)(j)*F.generators()[j];
            auto mres = F.membership(z);
            if (!membership_ok(mres)) {
                viable = false;
                break;
            }
            factors.push_back(z);
            certs.push_back(std::get<MembershipCertificate>(mres));
            rest = diffeo_compose(diffeo_invert(exp_field(z)), rest);
        }
        if (!viable) continue;
        if (!rest.is_tangent_to_identity(1e-7)) continue;

        FormalVectorField zlast = log_diffeo(rest, eps);
        auto mres = F.membership(zlast);
        if (!membership_ok(mres)) {
            const auto& f = std::get<MembershipFailure>(mres);
            if (!best_failure)
                best_failure = InnerFailure{InnerFailure::Stage::Residual,
                                            "no certificate found", f.degree};
            continue;
        }
        factors.push_back(zlast);
        certs.push_back(std::get<MembershipCertificate>(mres));

        FormalDiffeo recomposed = FormalDiffeo::identity(d, N);
        for (const auto& z : factors) recomposed = diffeo_compose(recomposed, exp_field(z));
        double err = 0.0;
        for (int i = 0; i < d; ++i) {
            TruncatedSeries diff = recomposed.component(i) - phi.component(i);
            err = std::max(err, diff.max_abs());
        }
        return InnerCertificate{std::move(factors), std::move(certs), err};
    }

    if (best_failure) return *best_failure;
    return InnerFailure{InnerFailure::Stage::Linear,
                        "linear part not in exp of linear algebra"};
}

struct InnerGeqKResult {
    bool inside = false;
    int obstruction_degree = -1;          // meaningful on failure
    FormalVectorField log_field;          // log of the input
    FormalVectorField obstruction;        // membership residual at the bad degree
};

// Complete membership test for Inner(T_0)_{>=k} = exp((T_0)_{>=k}): take the
// log and decide filtration membership.
inline InnerGeqKResult inner_geq_k_test(const FoliationModule& F, int k,
                                        const FormalDiffeo& phi) {
    if (k < 2) throw std::invalid_argument("inner_geq_k_test: k must be >= 2");
    if (!phi.is_tangent_to_identity(F.tolerance()))
        throw std::invalid_argument("inner_geq_k_test: linear part must be the identity");
    FormalVectorField z = log_diffeo(phi, F.tolerance());
    InnerGeqKResult out{false, -1, z, FormalVectorField(F.dim(), F.order())};
    Valuation v = z.valuation(F.tolerance());
    if (v.bottom) {
        out.inside = true;
        return out;
    }
    if (v.value < k) {
        out.obstruction_degree = v.value;
        return out;
    }
    auto res = F.filtration_membership(k, z);
    if (membership_ok(res)) {
        out.inside = true;
    } else {
        const auto& f = std::get<MembershipFailure>(res);
        out.obstruction_degree = f.degree;
        out.obstruction = f.residual;
    }
    return out;
}

struct OutClass {
    ScalarJet g;
    int sign = 1;  // sign of det of the linear part
};

// Class data in Out(T_0) for a module with a scalar first integral: the jet
// g with Phi^*(invariant) = g(invariant), plus the orientation sign.
inline OutClass out_class_invariant(const FoliationModule& F, const TruncatedSeries& invariant,
                                    const FormalDiffeo& phi) {
    const double eps = F.tolerance();
    for (const auto& gen : F.generators()) {
        TruncatedSeries der = gen.apply(invariant);
        if (der.max_abs() > eps * std::max(1.0, invariant.max_abs() * std::max(1.0, gen.max_abs())))
            throw std::invalid_argument(
                "out_class_invariant: invariant is not annihilated by the generators");
    }
    TruncatedSeries pullback = series_compose(invariant, phi.components());
    ScalarJetSolveFailure fail{};
    auto g = scalar_jet_solve(pullback, invariant, &fail, eps);
    if (!g)
        throw std::runtime_error("out_class_invariant: pullback is not a function of the invariant (degree " +
                                 std::to_string(fail.degree) + ")");
    int sign = phi.linear_part().determinant() > 0.0 ? 1 : -1;
    return {*g, sign};
}

// Total angle swept by the linear parts of a path of symmetries, in full
// turns.  Only supported for 1-dim rotation-type linear algebras.
inline int winding_number(const FoliationModule& F, const std::vector<FormalDiffeo>& path) {
    auto alg = F.linear_part_algebra();
    auto bhat = detail::rotation_generator(alg);
    if (!bhat)
        throw std::invalid_argument(
            "winding_number: unsupported (linear algebra is not a 1-dim rotation algebra)");
    if (path.empty()) throw std::invalid_argument("winding_number: empty path");
    const int d = F.dim();

    double total = 0.0;
    double prev = 0.0;
    for (size_t t = 0; t < path.size(); ++t) {
        Eigen::MatrixXd A = path[t].linear_part();
        double c = A.trace() / d;
        double s = ((*bhat).transpose() * A).trace() / d;
        double theta = std::atan2(s, c);
        if (t == 0) {
            prev = theta;
            continue;
        }
        double delta = theta - prev;
        while (delta > M_PI) delta -= 2.0 * M_PI;
        while (delta < -M_PI) delta += 2.0 * M_PI;
        if (std::abs(delta) >= M_PI / 2.0)
            throw std::invalid_argument("winding_number: path too coarse");
        total += delta;
        prev = theta;
    }
    Eigen::MatrixXd last = path.back().linear_part();
    Eigen::MatrixXd first = path.front().linear_part();
    if ((last - first).cwiseAbs().maxCoeff() > 1e-6)
        throw std::invalid_argument("winding_number: path does not close up");
    return static_cast<int>(std::lround(total / (2.0 * M_PI)));
}

}  // namespace folia
