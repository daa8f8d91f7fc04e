#pragma once

#include <array>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "folia/symmetry.hpp"

namespace folia {

// Combinatorial nerve of a finite good cover: opens, double overlaps (ordered
// a < b) and nonempty triple overlaps (ordered a < b < c).
struct Nerve {
    std::string name;
    std::vector<std::string> opens;
    std::vector<std::pair<int, int>> pairs;
    std::vector<std::array<int, 3>> triples;

    int pair_index(int a, int b) const {
        for (size_t i = 0; i < pairs.size(); ++i)
            if (pairs[i].first == a && pairs[i].second == b) return static_cast<int>(i);
        throw std::invalid_argument("Nerve: no such pair");
    }
};

namespace detail {

// Good cover of S^1 by three arcs A_i = (i/3 - delta, (i+1)/3 + delta),
// delta < 1/6: every pair of arcs meets in a single interval, the triple
// intersection is empty.
inline bool arcs_intersect(int i, int j) {
    (void)i;
    (void)j;
    return true;  // any two of the three arcs overlap (they cover the circle)
}

inline bool arc_triple_intersect(int i, int j, int k) {
    // the common intersection is empty iff all three arcs are distinct
    return !(i != j && j != k && i != k);
}

}  // namespace detail

// Built-in nerves.  torus3x3 is the product of two 3-arc circle covers; its
// pairs and triples are enumerated by brute force from the arc combinatorics.
inline Nerve builtin_nerve(const std::string& name) {
    Nerve n;
    n.name = name;
    if (name == "circle3") {
        n.opens = {"U0", "U1", "U2"};
        n.pairs = {{0, 1}, {0, 2}, {1, 2}};
        return n;
    }
    if (name == "torus3x3") {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                n.opens.push_back("U" + std::to_string(i) + std::to_string(j));
        auto row = [](int a) { return a / 3; };
        auto col = [](int a) { return a % 3; };
        for (int a = 0; a < 9; ++a)
            for (int b = a + 1; b < 9; ++b)
                if (detail::arcs_intersect(row(a), row(b)) && detail::arcs_intersect(col(a), col(b)))
                    n.pairs.emplace_back(a, b);
        for (int a = 0; a < 9; ++a)
            for (int b = a + 1; b < 9; ++b)
                for (int c = b + 1; c < 9; ++c)
                    if (detail::arc_triple_intersect(row(a), row(b), row(c)) &&
                        detail::arc_triple_intersect(col(a), col(b), col(c)))
                        n.triples.push_back({a, b, c});
        return n;
    }
    throw std::invalid_argument("builtin_nerve: unknown nerve '" + name + "'");
}

// Locally constant transition data valued in Sym(T_0), representing a
// 1-cocycle modulo Inner_{>=k}: one diffeo per ordered pair a < b, with
// sigma_ba = sigma_ab^{-1}.  Construction verifies that every sigma is a
// symmetry and that every oriented triple composite is tangent to the
// identity at order >= k; the module part of the cocycle condition (that the
// composite logs lie in (T_0)_{>=k}) is checked by cocycle_defect, so that a
// defect escaping the module surfaces as data rather than a construction
// failure.
class TransitionCocycle {
   public:
    TransitionCocycle(Nerve nerve, FoliationModule F, int level, std::vector<FormalDiffeo> sigma)
        : nerve_(std::move(nerve)), F_(std::move(F)), level_(level), sigma_(std::move(sigma)) {
        if (level_ < 2) throw std::invalid_argument("TransitionCocycle: level must be >= 2");
        if (sigma_.size() != nerve_.pairs.size())
            throw std::invalid_argument("TransitionCocycle: one transition per nerve pair");
        for (const auto& s : sigma_) {
            if (s.dim() != F_.dim() || s.order() != F_.order())
                throw std::invalid_argument("TransitionCocycle: dimension/order mismatch");
            if (!is_symmetry(F_, s).symmetric)
                throw std::invalid_argument("TransitionCocycle: transition is not a symmetry");
        }
        for (const auto& t : nerve_.triples) {
            FormalDiffeo comp = composite(t);
            if (comp.tangent_to_identity_order(F_.tolerance()) < level_) {
                std::ostringstream msg;
                msg << "TransitionCocycle: cocycle condition fails on triple (" << t[0] << ","
                    << t[1] << "," << t[2] << ") at level " << level_;
                throw std::invalid_argument(msg.str());
            }
        }
    }

    const Nerve& nerve() const { return nerve_; }
    const FoliationModule& module() const { return F_; }
    int level() const { return level_; }
    const std::vector<FormalDiffeo>& transitions() const { return sigma_; }

    FormalDiffeo sigma(int a, int b) const {
        if (a < b) return sigma_[nerve_.pair_index(a, b)];
        return diffeo_invert(sigma_[nerve_.pair_index(b, a)]);
    }

    // oriented composite sigma_ab o sigma_bc o sigma_ca
    FormalDiffeo composite(const std::array<int, 3>& t) const {
        return diffeo_compose(diffeo_compose(sigma(t[0], t[1]), sigma(t[1], t[2])),
                              sigma(t[2], t[0]));
    }

   private:
    Nerve nerve_;
    FoliationModule F_;
    int level_;
    std::vector<FormalDiffeo> sigma_;
};

struct TripleDefect {
    std::array<int, 3> triple;
    FormalVectorField tau;      // full log of the composite, in (T_0)_{>=k}
    Eigen::VectorXd tau_bar;    // coordinates in the degree-k graded-piece basis
};

namespace detail {

// Coordinates of the degree-k homogeneous field x in the orthonormal graded
// basis; throws when x has a component outside the graded piece.
inline Eigen::VectorXd graded_coordinates(const GradedPiece& gp, const FormalVectorField& x,
                                          int k, double eps) {
    const int g = static_cast<int>(gp.basis.size());
    Eigen::VectorXd c = Eigen::VectorXd::Zero(g);
    FormalVectorField resid = x.homogeneous_part(k);
    double scale = std::max(1.0, resid.max_abs());
    for (int i = 0; i < g; ++i) {
        double dot = 0.0;
        for (int comp = 0; comp < x.dim(); ++comp)
            for (int r = 0; r < gp.basis[i].component(comp).size(); ++r)
                dot += gp.basis[i].component(comp)[r] * resid.component(comp)[r];
        c(i) = dot;
    }
    for (int i = 0; i < g; ++i)
        if (c(i) != 0.0) resid -= c(i) * gp.basis[i];
    if (resid.max_abs() > 100.0 * eps * scale)
        throw std::logic_error("graded_coordinates: field is not in the graded piece");
    return c;
}

}  // namespace detail

// Per-triple defect tau_abc = log of the oriented composite, which must lie
// in the level-k filtration of the module; otherwise the transition data is
// inconsistent with symmetries of T_0 and a defect-escape error is raised.
inline std::vector<TripleDefect> cocycle_defect(const TransitionCocycle& tc) {
    const FoliationModule& F = tc.module();
    const int k = tc.level();
    const GradedPiece& gp = F.graded_piece(k);
    std::vector<TripleDefect> out;
    for (const auto& t : tc.nerve().triples) {
        FormalDiffeo comp = tc.composite(t);
        FormalVectorField tau = log_diffeo(comp, F.tolerance());
        Valuation v = tau.valuation(F.tolerance());
        if (!v.bottom) {
            auto res = F.filtration_membership(k, tau);
            if (!membership_ok(res)) {
                std::ostringstream msg;
                msg << "defect escapes the module on triple (" << t[0] << "," << t[1] << ","
                    << t[2] << ") at degree " << std::get<MembershipFailure>(res).degree;
                throw std::runtime_error(msg.str());
            }
        }
        out.push_back(
            TripleDefect{t, tau, detail::graded_coordinates(gp, tau, k, F.tolerance())});
    }
    return out;
}

struct Obstruction {
    int level = 0;
    // residual graded 2-cochain, one coordinate vector per nerve triple
    // (empty for defect-escape obstructions)
    std::vector<Eigen::VectorXd> residual;
    double residual_norm = 0.0;
    std::string diagnostic;  // human-readable cause
};

using LiftResult = std::variant<TransitionCocycle, Obstruction>;

inline bool lift_ok(const LiftResult& r) { return std::holds_alternative<TransitionCocycle>(r); }

// One induction step of the order-by-order simplification: solve the twisted
// coboundary equation for theta-bar over the degree-k graded piece
// (minimum-norm least squares), correct sigma_ab -> sigma_ab o exp(theta_ab),
// and return the level-(k+1) cocycle; when the defect class is not a
// coboundary the residual 2-cochain is returned as an Obstruction.
//
// With map composition (f o g = f after g), pushing the corrections exp(theta)
// to the front of sigma_ab e^{th_ab} sigma_bc e^{th_bc} e^{-th_ac} sigma_ca
// and using that inner factors act trivially on the graded piece gives the
// per-triple equation
//   Ad(sigma_ab) th_ab + Ad(sigma_ac) th_bc - Ad(sigma_ac) th_ac = -tau_abc.
inline LiftResult lift_cocycle(const TransitionCocycle& tc) {
    const FoliationModule& F = tc.module();
    const Nerve& nerve = tc.nerve();
    const int k = tc.level();
    const double eps = F.tolerance();
    const GradedPiece& gp = F.graded_piece(k);
    const int g = static_cast<int>(gp.basis.size());
    const int npairs = static_cast<int>(nerve.pairs.size());
    const int ntriples = static_cast<int>(nerve.triples.size());

    std::vector<TripleDefect> defects = cocycle_defect(tc);

    // adjoint action of each transition on the graded piece, column by column
    // through the module representatives
    std::vector<Eigen::MatrixXd> ad(npairs);
    for (int p = 0; p < npairs; ++p) {
        ad[p] = Eigen::MatrixXd::Zero(g, g);
        for (int i = 0; i < g; ++i) {
            FormalVectorField push = pushforward(tc.transitions()[p], gp.representatives[i]);
            ad[p].col(i) = detail::graded_coordinates(gp, push, k, eps);
        }
    }

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ntriples * g, npairs * g);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ntriples * g);
    double defect_scale = 1.0;
    for (int t = 0; t < ntriples; ++t) {
        const auto& tr = nerve.triples[t];
        int p_ab = nerve.pair_index(tr[0], tr[1]);
        int p_bc = nerve.pair_index(tr[1], tr[2]);
        int p_ac = nerve.pair_index(tr[0], tr[2]);
        M.block(t * g, p_ab * g, g, g) += ad[p_ab];
        M.block(t * g, p_bc * g, g, g) += ad[p_ac];
        M.block(t * g, p_ac * g, g, g) -= ad[p_ac];
        rhs.segment(t * g, g) = -defects[t].tau_bar;
        defect_scale = std::max(defect_scale, defects[t].tau_bar.cwiseAbs().maxCoeff());
    }

    Eigen::VectorXd theta_bar = Eigen::VectorXd::Zero(npairs * g);
    if (M.cols() > 0 && M.rows() > 0) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
        theta_bar = cod.solve(rhs);
    }
    Eigen::VectorXd resid = (M.rows() > 0 ? Eigen::VectorXd(M * theta_bar - rhs) : rhs);
    if (resid.size() > 0 && resid.cwiseAbs().maxCoeff() > 1e-7 * defect_scale) {
        Obstruction ob;
        ob.level = k;
        ob.residual_norm = resid.cwiseAbs().maxCoeff();
        for (int t = 0; t < ntriples; ++t) ob.residual.push_back(-resid.segment(t * g, g));
        ob.diagnostic = "defect class is not a coboundary at level " + std::to_string(k);
        return ob;
    }

    std::vector<FormalDiffeo> corrected;
    corrected.reserve(npairs);
    for (int p = 0; p < npairs; ++p) {
        FormalVectorField theta(F.dim(), F.order());
        for (int i = 0; i < g; ++i) {
            double c = theta_bar(p * g + i);
            if (c != 0.0) theta += c * gp.representatives[i];
        }
        corrected.push_back(diffeo_compose(tc.transitions()[p], exp_field(theta, eps)));
    }
    return TransitionCocycle(nerve, F, k + 1, std::move(corrected));
}

struct LiftLevelLog {
    int level = 0;
    double max_defect = 0.0;  // largest graded defect coordinate at this level
    double max_theta = 0.0;   // largest correction coordinate applied
};

struct LiftReport {
    TransitionCocycle final_cocycle;  // highest level reached
    std::vector<LiftLevelLog> levels;
    std::optional<Obstruction> obstruction;
    std::optional<std::string> error;  // defect-escape diagnostic, if any
};

// Iterate lift_cocycle from the input level up to target_k, recording
// per-level defect and correction sizes; stops at the first obstruction or
// defect escape, returning the partial progress.
inline LiftReport lift_to_order(const TransitionCocycle& tc, int target_k) {
    if (target_k > tc.module().order() - 1)
        throw std::invalid_argument("lift_to_order: target level exceeds order - 1");
    LiftReport rep{tc, {}, std::nullopt, std::nullopt};
    while (rep.final_cocycle.level() < target_k) {
        const TransitionCocycle& cur = rep.final_cocycle;
        LiftLevelLog log;
        log.level = cur.level();
        try {
            auto defects = cocycle_defect(cur);
            for (const auto& d : defects)
                if (d.tau_bar.size() > 0)
                    log.max_defect = std::max(log.max_defect, d.tau_bar.cwiseAbs().maxCoeff());
            LiftResult res = lift_cocycle(cur);
            if (!lift_ok(res)) {
                rep.obstruction = std::get<Obstruction>(res);
                rep.levels.push_back(log);
                return rep;
            }
            TransitionCocycle next = std::get<TransitionCocycle>(std::move(res));
            for (size_t p = 0; p < next.transitions().size(); ++p) {
                FormalDiffeo ratio =
                    diffeo_compose(diffeo_invert(cur.transitions()[p]), next.transitions()[p]);
                for (int i = 0; i < ratio.dim(); ++i) {
                    TruncatedSeries disp =
                        ratio.component(i) - TruncatedSeries::coordinate(ratio.dim(), ratio.order(), i);
                    log.max_theta = std::max(log.max_theta, disp.max_abs());
                }
            }
            rep.levels.push_back(log);
            rep.final_cocycle = std::move(next);
        } catch (const std::runtime_error& e) {
            Obstruction ob;
            ob.level = cur.level();
            ob.diagnostic = e.what();
            rep.obstruction = std::move(ob);
            rep.error = e.what();
            rep.levels.push_back(log);
            return rep;
        }
    }
    return rep;
}

}  // namespace folia
