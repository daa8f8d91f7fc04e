#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "folia/series.hpp"
#include "folia/vector_field.hpp"

namespace folia {

// Witness that X = sum_j f_j V_j within tolerance at order N.
struct MembershipCertificate {
    std::vector<TruncatedSeries> coefficients;  // one series f_j per generator
    std::vector<double> residual_per_degree;    // max unexplained coefficient per degree
};

struct MembershipFailure {
    int degree = 0;                  // first degree whose residual exceeds tolerance
    double residual_norm = 0.0;      // its magnitude
    FormalVectorField residual;      // best-fit residual of the through-degree solve
};

using MembershipResult = std::variant<MembershipCertificate, MembershipFailure>;

inline bool membership_ok(const MembershipResult& r) {
    return std::holds_alternative<MembershipCertificate>(r);
}

// Homogeneous degree-k leading terms of valuation->=k module elements, each
// basis vector paired with a genuine module-element representative.
struct GradedPiece {
    int degree = 0;
    std::vector<FormalVectorField> basis;            // homogeneous, orthonormal coefficient vectors
    std::vector<FormalVectorField> representatives;  // full module elements, valuation >= k
};

// Finitely generated module of formal vector fields vanishing at 0, closed
// under Lie bracket (verified on construction up to the truncation order).
class FoliationModule {
  public:
    FoliationModule(int dim, int order, std::vector<FormalVectorField> generators,
                    double eps = kDefaultTolerance)
        : dim_(dim), order_(order), eps_(eps), gens_(std::move(generators)) {
        for (const auto& g : gens_) {
            if (g.dim() != dim_ || g.order() != order_)
                throw std::invalid_argument("FoliationModule: generator dimension/order mismatch");
            if (!g.vanishes_at_zero(eps_))
                throw std::invalid_argument("FoliationModule: generator does not vanish at 0");
        }
        build_columns();
        verify_bracket_closure();
    }

    // copies/moves drop the graded-piece cache (it is lazily rebuilt); the
    // mutex itself is never transferred
    FoliationModule(const FoliationModule& o)
        : dim_(o.dim_),
          order_(o.order_),
          eps_(o.eps_),
          gens_(o.gens_),
          tab_(o.tab_),
          rows_(o.rows_),
          row_degree_(o.row_degree_),
          cols_(o.cols_),
          col_gen_(o.col_gen_),
          col_mono_(o.col_mono_),
          col_min_degree_(o.col_min_degree_),
          col_coeff_degree_(o.col_coeff_degree_),
          A_(o.A_) {}
    FoliationModule(FoliationModule&& o) noexcept
        : dim_(o.dim_),
          order_(o.order_),
          eps_(o.eps_),
          gens_(std::move(o.gens_)),
          tab_(std::move(o.tab_)),
          rows_(o.rows_),
          row_degree_(std::move(o.row_degree_)),
          cols_(std::move(o.cols_)),
          col_gen_(std::move(o.col_gen_)),
          col_mono_(std::move(o.col_mono_)),
          col_min_degree_(std::move(o.col_min_degree_)),
          col_coeff_degree_(std::move(o.col_coeff_degree_)),
          A_(std::move(o.A_)) {}
    FoliationModule& operator=(FoliationModule o) noexcept {
        dim_ = o.dim_;
        order_ = o.order_;
        eps_ = o.eps_;
        gens_ = std::move(o.gens_);
        tab_ = std::move(o.tab_);
        rows_ = o.rows_;
        row_degree_ = std::move(o.row_degree_);
        cols_ = std::move(o.cols_);
        col_gen_ = std::move(o.col_gen_);
        col_mono_ = std::move(o.col_mono_);
        col_min_degree_ = std::move(o.col_min_degree_);
        col_coeff_degree_ = std::move(o.col_coeff_degree_);
        A_ = std::move(o.A_);
        graded_cache_.clear();
        return *this;
    }

    int dim() const { return dim_; }
    int order() const { return order_; }
    double tolerance() const { return eps_; }
    const std::vector<FormalVectorField>& generators() const { return gens_; }

    // Degree-by-degree least-squares membership solve.  Coefficient jets of
    // the f_j are restricted to valuation >= min_coeff_valuation.
    MembershipResult membership(const FormalVectorField& x, int min_coeff_valuation = 0) const {
        check_input(x);
        const double tol = eps_ * std::max(1.0, x.max_abs());

        // Degree-by-degree: at degree k, minimize the degree-k mismatch over
        // the affine space of coefficient jets that match exactly below k.
        std::vector<int> use_cols;
        for (int c = 0; c < static_cast<int>(cols_.size()); ++c)
            if (col_coeff_degree_[c] >= min_coeff_valuation) use_cols.push_back(c);
        const int n = static_cast<int>(use_cols.size());

        Eigen::VectorXd u0 = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd xfull = stack(x);

        std::vector<double> per_degree(order_ + 1, 0.0);
        for (int k = 0; k <= order_; ++k) {
            std::vector<int> rowsk;
            for (int r = 0; r < rows_; ++r)
                if (row_degree_[r] == k) rowsk.push_back(r);
            Eigen::MatrixXd Rk(rowsk.size(), n);
            Eigen::VectorXd bk(rowsk.size());
            for (size_t i = 0; i < rowsk.size(); ++i) {
                for (int j = 0; j < n; ++j) Rk(i, j) = A_(rowsk[i], use_cols[j]);
                bk(i) = xfull(rowsk[i]);
            }
            Eigen::VectorXd rhs = bk - Rk * u0;
            Eigen::VectorXd res;
            if (K.cols() == 0) {
                res = -rhs;
            } else {
                Eigen::MatrixXd M = Rk * K;
                Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
                Eigen::VectorXd w = cod.solve(rhs);
                res = M * w - rhs;
                u0 += K * w;
            }
            double resnorm = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
            per_degree[k] = resnorm;
            if (resnorm > tol) {
                FormalVectorField rf(dim_, order_);
                for (size_t i = 0; i < rowsk.size(); ++i) {
                    int row = rowsk[i];
                    rf.component(row / tab_->size()).operator[](row % tab_->size()) = -res(i);
                }
                return MembershipFailure{k, resnorm, rf};
            }
            if (K.cols() > 0 && k < order_) {
                // restrict to directions that leave the degree-k match intact
                Eigen::MatrixXd M = Rk * K;
                Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M.transpose());
                qr.setThreshold(1e-10);
                int rank = static_cast<int>(qr.rank());
                if (rank >= K.cols()) {
                    K.resize(n, 0);
                } else {
                    Eigen::MatrixXd Q =
                        qr.householderQ() * Eigen::MatrixXd::Identity(K.cols(), K.cols());
                    K = K * Q.rightCols(K.cols() - rank);
                }
            }
        }

        Solve sol;
        sol.u = Eigen::VectorXd::Zero(cols_.size());
        for (int j = 0; j < n; ++j) sol.u(use_cols[j]) = u0(j);
        sol.residual_per_degree = per_degree;
        sol.max_degree = order_;
        return make_certificate(sol, min_coeff_valuation);
    }

    // Membership in (T_0)_{>= k}: the input must already vanish to order >= k.
    // With strict = true each coefficient f_j is additionally required to have
    // valuation >= k - val(V_j).
    MembershipResult filtration_membership(int k, const FormalVectorField& x,
                                           bool strict = false) const {
        check_input(x);
        if (!x.order_at_least(k, eps_))
            throw std::invalid_argument("filtration_membership: input valuation below k");
        if (!strict) return membership(x, 0);
        // per-generator valuation floors are handled by the shared solver via
        // the global floor only when uniform; conservative uniform choice:
        int floor = k;
        for (const auto& g : gens_) {
            Valuation v = g.valuation(eps_);
            if (!v.bottom) floor = std::min(floor, std::max(0, k - v.value));
        }
        return membership(x, floor);
    }

    // Rank of the degree-k coefficient block of the module, for k = 1..N.
    std::vector<int> degree_dimensions() const {
        std::vector<int> dims;
        dims.reserve(order_);
        for (int k = 1; k <= order_; ++k) {
            Eigen::MatrixXd block = degree_rows(k);
            if (block.cols() == 0 || block.rows() == 0) {
                dims.push_back(0);
                continue;
            }
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(block);
            const auto& s = svd.singularValues();
            double cut = 1e-7 * (s.size() ? s(0) : 0.0);
            int r = 0;
            for (int i = 0; i < s.size(); ++i)
                if (s(i) > cut && s(i) > 0.0) ++r;
            dims.push_back(r);
        }
        return dims;
    }

    // Basis of the space of linear parts of module elements, closed under
    // matrix commutator (violation means the module was not bracket-closed).
    std::vector<Eigen::MatrixXd> linear_part_algebra() const {
        std::vector<Eigen::MatrixXd> raw;
        for (const auto& g : gens_) {
            auto lp = g.linear_part();
            Eigen::MatrixXd m(dim_, dim_);
            for (int i = 0; i < dim_; ++i)
                for (int j = 0; j < dim_; ++j) m(i, j) = lp[i][j];
            if (m.cwiseAbs().maxCoeff() > eps_) raw.push_back(m);
        }
        auto basis = orthonormal_matrix_basis(raw);
        // commutator closure
        for (const auto& a : basis)
            for (const auto& b : basis) {
                Eigen::MatrixXd c = a * b - b * a;
                Eigen::MatrixXd res = project_off(c, basis);
                if (res.size() && res.cwiseAbs().maxCoeff() > 1e-7 * std::max(1.0, c.cwiseAbs().maxCoeff()))
                    throw std::logic_error("linear_part_algebra: not closed under commutator");
            }
        return basis;
    }

    bool module_equal(const FoliationModule& other) const {
        if (dim_ != other.dim_ || order_ != other.order_)
            throw std::invalid_argument("module_equal: dimension/order mismatch");
        for (const auto& g : gens_)
            if (!membership_ok(other.membership(g))) return false;
        for (const auto& g : other.gens_)
            if (!membership_ok(membership(g))) return false;
        return true;
    }

    // Graded piece (T_0)_{>=k} / (T_0)_{>=k+1} with module-element representatives.
    const GradedPiece& graded_piece(int k) const {
        std::lock_guard<std::mutex> lock(cache_mu_);
        auto it = graded_cache_.find(k);
        if (it != graded_cache_.end()) return *it->second;
        auto gp = std::make_unique<GradedPiece>(compute_graded_piece(k));
        auto [pos, ok] = graded_cache_.emplace(k, std::move(gp));
        (void)ok;
        return *pos->second;
    }

  private:
    struct Solve {
        Eigen::VectorXd u;                        // unknown vector (possibly empty)
        std::vector<double> residual_per_degree;  // indexed by degree 0..k
        int max_degree = 0;
    };

    void check_input(const FormalVectorField& x) const {
        if (x.dim() != dim_ || x.order() != order_)
            throw std::invalid_argument("FoliationModule: input dimension/order mismatch");
    }

    // Unknown layout: for each generator j and each monomial m with
    // deg(m) + val_j <= N, the coefficient of x^m in f_j.  Columns hold the
    // stacked coefficients of x^m V_j over all components.
    void build_columns() {
        tab_ = MonomialTable::get(dim_, order_);
        const int M = tab_->size();
        rows_ = dim_ * M;
        row_degree_.resize(rows_);
        for (int c = 0; c < dim_; ++c)
            for (int r = 0; r < M; ++r) row_degree_[c * M + r] = tab_->degree(r);

        for (int j = 0; j < static_cast<int>(gens_.size()); ++j) {
            Valuation v = gens_[j].valuation(eps_);
            if (v.bottom) continue;  // zero generator spans nothing
            for (int m = 0; m < M; ++m) {
                if (tab_->degree(m) + v.value > order_) continue;
                TruncatedSeries f(tab_);
                f[m] = 1.0;
                FormalVectorField col = f * gens_[j];
                cols_.push_back(stack(col));
                col_gen_.push_back(j);
                col_mono_.push_back(m);
                col_min_degree_.push_back(tab_->degree(m) + v.value);
                col_coeff_degree_.push_back(tab_->degree(m));
            }
        }
        if (!cols_.empty()) {
            A_.resize(rows_, static_cast<int>(cols_.size()));
            for (int c = 0; c < static_cast<int>(cols_.size()); ++c) A_.col(c) = cols_[c];
        } else {
            A_.resize(rows_, 0);
        }
    }

    Eigen::VectorXd stack(const FormalVectorField& x) const {
        const int M = tab_->size();
        Eigen::VectorXd v(rows_);
        for (int c = 0; c < dim_; ++c)
            for (int r = 0; r < M; ++r) v(c * M + r) = x.component(c)[r];
        return v;
    }

    FormalVectorField unstack(const Eigen::VectorXd& v) const {
        const int M = tab_->size();
        FormalVectorField x(dim_, order_);
        for (int c = 0; c < dim_; ++c)
            for (int r = 0; r < M; ++r) x.component(c)[r] = v(c * M + r);
        return x;
    }

    MembershipCertificate make_certificate(const Solve& sol, int min_coeff_valuation) const {
        (void)min_coeff_valuation;
        MembershipCertificate cert;
        cert.coefficients.assign(gens_.size(), TruncatedSeries(tab_));
        for (int c = 0; c < static_cast<int>(cols_.size()); ++c)
            if (sol.u.size() > c && sol.u(c) != 0.0)
                cert.coefficients[col_gen_[c]][col_mono_[c]] += sol.u(c);
        cert.residual_per_degree = sol.residual_per_degree;
        return cert;
    }

    // Degree-k rows of the column matrix (the degree-k coefficient block).
    Eigen::MatrixXd degree_rows(int k) const {
        std::vector<int> use_rows;
        for (int r = 0; r < rows_; ++r)
            if (row_degree_[r] == k) use_rows.push_back(r);
        Eigen::MatrixXd block(use_rows.size(), cols_.size());
        for (size_t i = 0; i < use_rows.size(); ++i)
            for (int j = 0; j < static_cast<int>(cols_.size()); ++j)
                block(i, j) = A_(use_rows[i], j);
        return block;
    }

    void verify_bracket_closure() {
        for (size_t i = 0; i < gens_.size(); ++i)
            for (size_t j = i + 1; j < gens_.size(); ++j) {
                auto br = lie_bracket(gens_[i], gens_[j]);
                if (!membership_ok(membership(br)))
                    throw std::invalid_argument(
                        "FoliationModule: generators are not stable under Lie bracket");
            }
    }

    std::vector<Eigen::MatrixXd> orthonormal_matrix_basis(
        const std::vector<Eigen::MatrixXd>& raw) const {
        std::vector<Eigen::MatrixXd> basis;
        if (raw.empty()) return basis;
        Eigen::MatrixXd V(dim_ * dim_, raw.size());
        for (size_t c = 0; c < raw.size(); ++c)
            V.col(c) = Eigen::Map<const Eigen::VectorXd>(raw[c].data(), dim_ * dim_);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeThinU);
        const auto& s = svd.singularValues();
        double cut = 1e-7 * (s.size() ? s(0) : 0.0);
        for (int i = 0; i < s.size(); ++i) {
            if (s(i) <= cut || s(i) == 0.0) continue;
            Eigen::VectorXd u = svd.matrixU().col(i);
            basis.push_back(Eigen::Map<Eigen::MatrixXd>(u.data(), dim_, dim_));
        }
        return basis;
    }

    static Eigen::MatrixXd project_off(const Eigen::MatrixXd& m,
                                       const std::vector<Eigen::MatrixXd>& basis) {
        Eigen::MatrixXd r = m;
        for (const auto& b : basis) {
            double dot = (r.array() * b.array()).sum();
            r -= dot * b;
        }
        return r;
    }

    GradedPiece compute_graded_piece(int k) const {
        GradedPiece gp;
        gp.degree = k;
        // unknowns whose columns can contribute at degrees <= k
        std::vector<int> use_cols;
        for (int c = 0; c < static_cast<int>(cols_.size()); ++c)
            if (col_min_degree_[c] <= k) use_cols.push_back(c);
        if (use_cols.empty()) return gp;

        std::vector<int> low_rows, k_rows;
        for (int r = 0; r < rows_; ++r) {
            if (row_degree_[r] >= 1 && row_degree_[r] < k) low_rows.push_back(r);
            if (row_degree_[r] == k) k_rows.push_back(r);
        }
        Eigen::MatrixXd Mlow(low_rows.size(), use_cols.size());
        for (size_t i = 0; i < low_rows.size(); ++i)
            for (size_t j = 0; j < use_cols.size(); ++j)
                Mlow(i, j) = A_(low_rows[i], use_cols[j]);
        Eigen::MatrixXd Mk(k_rows.size(), use_cols.size());
        for (size_t i = 0; i < k_rows.size(); ++i)
            for (size_t j = 0; j < use_cols.size(); ++j)
                Mk(i, j) = A_(k_rows[i], use_cols[j]);

        // kernel of the low-degree constraints
        Eigen::MatrixXd K;
        if (low_rows.empty()) {
            K = Eigen::MatrixXd::Identity(use_cols.size(), use_cols.size());
        } else {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(Mlow, Eigen::ComputeFullV);
            const auto& s = svd.singularValues();
            double cut = 1e-7 * (s.size() ? s(0) : 0.0);
            int rank = 0;
            for (int i = 0; i < s.size(); ++i)
                if (s(i) > cut && s(i) > 0.0) ++rank;
            int nullity = static_cast<int>(use_cols.size()) - rank;
            if (nullity == 0) return gp;
            K = svd.matrixV().rightCols(nullity);
        }

        Eigen::MatrixXd MkK = Mk * K;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd2(MkK, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& s2 = svd2.singularValues();
        double cut2 = 1e-7 * (s2.size() ? s2(0) : 0.0);
        for (int i = 0; i < s2.size(); ++i) {
            if (s2(i) <= cut2 || s2(i) == 0.0) continue;
            // basis vector: homogeneous degree-k field with coefficients U.col(i)
            FormalVectorField b(dim_, order_);
            Eigen::VectorXd ucol = svd2.matrixU().col(i);
            for (size_t r = 0; r < k_rows.size(); ++r) {
                int row = k_rows[r];
                int comp = row / tab_->size();
                int mono = row % tab_->size();
                b.component(comp)[mono] = ucol(r);
            }
            gp.basis.push_back(b);
            // representative: module element whose leading degree-k part is b
            Eigen::VectorXd unk = K * svd2.matrixV().col(i) / s2(i);
            FormalVectorField rep(dim_, order_);
            for (size_t j = 0; j < use_cols.size(); ++j) {
                int c = use_cols[j];
                if (unk(j) == 0.0) continue;
                TruncatedSeries f(tab_);
                f[col_mono_[c]] = unk(j);
                rep += f * gens_[col_gen_[c]];
            }
            gp.representatives.push_back(rep);
        }
        return gp;
    }

    int dim_;
    int order_;
    double eps_;
    std::vector<FormalVectorField> gens_;

    std::shared_ptr<const MonomialTable> tab_;
    int rows_ = 0;
    std::vector<int> row_degree_;
    std::vector<Eigen::VectorXd> cols_;
    std::vector<int> col_gen_, col_mono_, col_min_degree_, col_coeff_degree_;
    Eigen::MatrixXd A_;

    mutable std::mutex cache_mu_;
    mutable std::map<int, std::unique_ptr<GradedPiece>> graded_cache_;
};

}  // namespace folia
