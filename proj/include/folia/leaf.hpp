#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "folia/symmetry.hpp"

namespace folia {

enum class LeafKind { Circle, Torus };

inline int leaf_dimension(LeafKind k) { return k == LeafKind::Circle ? 1 : 2; }

// A product-type foliation around a compact leaf (S^1 or T^2): one horizontal
// lift H(d/dtheta_i) = d/dtheta_i + V_i per leaf direction, with V_i a field
// in the transverse variables only, plus the vertical module T.
class LeafFoliation {
   public:
    LeafFoliation(LeafKind kind, std::vector<FormalVectorField> horizontal, FoliationModule vertical)
        : kind_(kind), horizontal_(std::move(horizontal)), vertical_(std::move(vertical)) {
        const double eps = vertical_.tolerance();
        if (static_cast<int>(horizontal_.size()) != leaf_dimension(kind_))
            throw std::invalid_argument("LeafFoliation: one horizontal part per leaf direction");
        for (const auto& v : horizontal_) {
            if (v.dim() != vertical_.dim() || v.order() != vertical_.order())
                throw std::invalid_argument("LeafFoliation: dimension/order mismatch");
            if (!v.vanishes_at_zero(eps))
                throw std::invalid_argument(
                    "LeafFoliation: horizontal parts must vanish at the transverse origin");
        }
        // closure of the generating set: horizontal-horizontal curvature and
        // horizontal-vertical brackets must land in the vertical module
        for (size_t i = 0; i < horizontal_.size(); ++i) {
            for (size_t j = i + 1; j < horizontal_.size(); ++j)
                require_vertical(lie_bracket(horizontal_[i], horizontal_[j]),
                                 "[V_" + std::to_string(i + 1) + ", V_" + std::to_string(j + 1) + "]");
            for (size_t j = 0; j < vertical_.generators().size(); ++j)
                require_vertical(lie_bracket(horizontal_[i], vertical_.generators()[j]),
                                 "[V_" + std::to_string(i + 1) + ", W_" + std::to_string(j + 1) + "]");
        }
    }

    LeafKind kind() const { return kind_; }
    int transverse_dim() const { return vertical_.dim(); }
    int order() const { return vertical_.order(); }
    const std::vector<FormalVectorField>& horizontal() const { return horizontal_; }
    const FoliationModule& vertical() const { return vertical_; }

   private:
    void require_vertical(const FormalVectorField& b, const std::string& name) const {
        auto res = vertical_.membership(b);
        if (!membership_ok(res)) {
            std::ostringstream msg;
            msg << "not an F-connection/foliation pair: " << name
                << " leaves the vertical module at degree "
                << std::get<MembershipFailure>(res).degree;
            throw std::invalid_argument(msg.str());
        }
    }

    LeafKind kind_;
    std::vector<FormalVectorField> horizontal_;
    FoliationModule vertical_;
};

inline LeafFoliation build_leaf_foliation(LeafKind kind, std::vector<FormalVectorField> horizontal,
                                          FoliationModule vertical) {
    return LeafFoliation(kind, std::move(horizontal), std::move(vertical));
}

// Parallel transport around fundamental loop `loop_index` (1-based), `turns`
// times.  For base-constant horizontal parts this is exactly the time-`turns`
// flow of the vertical part of the lift.
inline FormalDiffeo holonomy(const LeafFoliation& lf, int loop_index, int turns = 1) {
    if (loop_index < 1 || loop_index > leaf_dimension(lf.kind()))
        throw std::invalid_argument("holonomy: loop_index out of range");
    FormalDiffeo pt = exp_field(static_cast<double>(turns) * lf.horizontal()[loop_index - 1]);
    if (!is_symmetry(lf.vertical(), pt).symmetric)
        throw std::logic_error("holonomy: transport failed the symmetry check (internal inconsistency)");
    return pt;
}

struct TorusTriple {
    FormalDiffeo phi;    // loop-1 holonomy
    FormalDiffeo psi;    // loop-2 holonomy
    FormalDiffeo kappa;  // psi o phi o psi^{-1} o phi^{-1}
    InnerResult inner;
};

// The commutator of the two fundamental holonomies must be inner; returns the
// triple together with the certificate search result.
inline TorusTriple torus_triple_check(const LeafFoliation& lf) {
    if (lf.kind() != LeafKind::Torus)
        throw std::invalid_argument("torus_triple_check: requires a torus leaf");
    FormalDiffeo phi = holonomy(lf, 1);
    FormalDiffeo psi = holonomy(lf, 2);
    FormalDiffeo kappa = diffeo_compose(
        diffeo_compose(psi, phi), diffeo_compose(diffeo_invert(psi), diffeo_invert(phi)));
    InnerResult inner = inner_certificate(lf.vertical(), kappa);
    return {std::move(phi), std::move(psi), std::move(kappa), std::move(inner)};
}

struct LoopClass {
    int loop = 0;
    bool trivial_in_out = false;
    int obstruction_degree = -1;            // membership failure degree when nontrivial
    std::optional<OutClass> out_class;      // class data when an invariant is supplied
};

// Per-loop image in Out of the vertical module: trivial when an inner
// certificate exists, otherwise class data against the supplied invariant.
inline std::vector<LoopClass> outer_holonomy_report(
    const LeafFoliation& lf, const std::optional<TruncatedSeries>& invariant = std::nullopt) {
    std::vector<LoopClass> out;
    for (int i = 1; i <= leaf_dimension(lf.kind()); ++i) {
        FormalDiffeo pt = holonomy(lf, i);
        LoopClass lc;
        lc.loop = i;
        InnerResult res = inner_certificate(lf.vertical(), pt);
        if (inner_ok(res)) {
            lc.trivial_in_out = true;
        } else {
            lc.trivial_in_out = false;
            lc.obstruction_degree = std::get<InnerFailure>(res).degree;
            if (invariant) lc.out_class = out_class_invariant(lf.vertical(), *invariant, pt);
        }
        out.push_back(std::move(lc));
    }
    return out;
}

// Vertical redefinition H -> H + lambda: each lambda_i must already belong to
// the vertical module, so the generated foliation is unchanged.
inline LeafFoliation field_redefinition(const LeafFoliation& lf,
                                        const std::vector<FormalVectorField>& lambda_list) {
    if (lambda_list.size() != lf.horizontal().size())
        throw std::invalid_argument("field_redefinition: one lambda per leaf direction");
    for (const auto& lam : lambda_list) {
        auto res = lf.vertical().membership(lam);
        if (!membership_ok(res)) {
            std::ostringstream msg;
            msg << "not a vertical redefinition: lambda fails membership at degree "
                << std::get<MembershipFailure>(res).degree;
            throw std::invalid_argument(msg.str());
        }
    }
    std::vector<FormalVectorField> hor = lf.horizontal();
    for (size_t i = 0; i < hor.size(); ++i) hor[i] += lambda_list[i];
    LeafFoliation out(lf.kind(), std::move(hor), lf.vertical());
    // the generated module is unchanged: the new and old lifts differ by
    // vertical elements in both directions
    for (size_t i = 0; i < lambda_list.size(); ++i) {
        FormalVectorField diff = out.horizontal()[i] - lf.horizontal()[i];
        if (!membership_ok(lf.vertical().membership(diff)) ||
            !membership_ok(out.vertical().membership(-1.0 * diff)))
            throw std::logic_error("field_redefinition: generated module changed (internal error)");
    }
    return out;
}

enum class CompareVerdict { Distinguished, IndistinguishableByInvariants };

inline const char* to_string(CompareVerdict v) {
    return v == CompareVerdict::Distinguished ? "distinguished" : "indistinguishable-by-invariants";
}

// Sound comparison of two circle-leaf foliations over the same transverse
// module by their computable Out-class invariants.
inline CompareVerdict circle_class_compare(const LeafFoliation& a, const LeafFoliation& b,
                                           const TruncatedSeries& invariant) {
    if (a.kind() != LeafKind::Circle || b.kind() != LeafKind::Circle)
        throw std::invalid_argument("circle_class_compare: requires circle leaves");
    if (a.transverse_dim() != b.transverse_dim() || a.order() != b.order() ||
        !a.vertical().module_equal(b.vertical()))
        throw std::invalid_argument("circle_class_compare: transverse modules differ");
    const double eps = a.vertical().tolerance();

    auto ra = outer_holonomy_report(a, invariant).front();
    auto rb = outer_holonomy_report(b, invariant).front();
    if (ra.trivial_in_out != rb.trivial_in_out) return CompareVerdict::Distinguished;
    if (ra.trivial_in_out) return CompareVerdict::IndistinguishableByInvariants;
    const OutClass& ca = *ra.out_class;
    const OutClass& cb = *rb.out_class;
    if (ca.sign != cb.sign) return CompareVerdict::Distinguished;
    size_t n = std::min(ca.g.coeffs.size(), cb.g.coeffs.size());
    for (size_t i = 0; i < n; ++i)
        if (std::abs(ca.g.coeffs[i] - cb.g.coeffs[i]) > eps * 10.0)
            return CompareVerdict::Distinguished;
    return CompareVerdict::IndistinguishableByInvariants;
}

}  // namespace folia
