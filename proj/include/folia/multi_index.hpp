#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace folia {

// Exponent vector of a monomial in d variables.
using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& e) {
    return std::accumulate(e.begin(), e.end(), 0);
}

namespace detail {

// Number of monomials of exact degree n in d variables: C(n+d-1, d-1).
inline long monomial_count(int n, int d) {
    if (n < 0) return 0;
    if (d == 0) return n == 0 ? 1 : 0;
    long r = 1;
    for (int i = 1; i < d; ++i) r = r * (n + i) / i;
    return r;
}

}  // namespace detail

// Shared enumeration of all monomials of total degree <= N in d variables,
// in graded lexicographic order (by total degree, then lex with x1 > x2 > ...,
// higher power of the earlier variable first).
class MonomialTable {
  public:
    static std::shared_ptr<const MonomialTable> get(int dim, int order) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, std::shared_ptr<const MonomialTable>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_pair(dim, order);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        auto tab = std::shared_ptr<const MonomialTable>(new MonomialTable(dim, order));
        cache.emplace(key, tab);
        return tab;
    }

    int dim() const { return dim_; }
    int order() const { return order_; }
    int size() const { return static_cast<int>(exps_.size()); }

    const MultiIndex& exponents(int rank) const { return exps_[rank]; }
    int degree(int rank) const { return degrees_[rank]; }

    // First rank of degree k; ranks [degree_begin(k), degree_begin(k+1)) are
    // exactly the degree-k monomials.
    int degree_begin(int k) const { return k <= order_ ? offsets_[k] : size(); }
    int degree_end(int k) const { return degree_begin(k + 1); }
    int degree_count(int k) const { return degree_end(k) - degree_begin(k); }

    // Rank of an exponent vector; -1 when the total degree exceeds the order.
    int rank(const MultiIndex& e) const {
        int deg = total_degree(e);
        if (deg > order_) return -1;
        int r = offsets_[deg];
        int rem = deg;
        for (int i = 0; i + 1 < dim_; ++i) {
            // monomials of degree rem in (dim_-i) vars with leading exponent > e[i]
            for (int a = rem; a > e[i]; --a)
                r += static_cast<int>(detail::monomial_count(rem - a, dim_ - i - 1));
            rem -= e[i];
        }
        return r;
    }

    // Rank of the product monomial, or -1 on truncation overflow.
    int product_rank(int a, int b) const {
        if (degrees_[a] + degrees_[b] > order_) return -1;
        MultiIndex e(dim_);
        for (int i = 0; i < dim_; ++i) e[i] = exps_[a][i] + exps_[b][i];
        return rank(e);
    }

  private:
    MonomialTable(int dim, int order) : dim_(dim), order_(order) {
        if (dim < 1 || order < 0) throw std::invalid_argument("MonomialTable: bad dim/order");
        offsets_.resize(order + 2, 0);
        MultiIndex e(dim, 0);
        for (int k = 0; k <= order; ++k) {
            offsets_[k] = static_cast<int>(exps_.size());
            emit_degree(e, 0, k);
        }
        offsets_[order + 1] = static_cast<int>(exps_.size());
        degrees_.resize(exps_.size());
        for (size_t i = 0; i < exps_.size(); ++i) degrees_[i] = total_degree(exps_[i]);
    }

    void emit_degree(MultiIndex& e, int pos, int rem) {
        if (pos == dim_ - 1) {
            e[pos] = rem;
            exps_.push_back(e);
            return;
        }
        for (int a = rem; a >= 0; --a) {
            e[pos] = a;
            emit_degree(e, pos + 1, rem - a);
        }
        e[pos] = 0;
    }

    int dim_;
    int order_;
    std::vector<MultiIndex> exps_;
    std::vector<int> degrees_;
    std::vector<int> offsets_;
};

}  // namespace folia
