#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>

namespace drsched::lp {

/// Sparse LDL' factorization of a symmetric quasi-definite matrix.
///
/// Every node carries an expected pivot sign (+1 or -1). A pivot that comes
/// out with the wrong sign or with magnitude below `pivot_eps` is replaced by
/// sign * `dynamic_reg`, which keeps the factorization alive when round-off
/// cancels the diagonal late in an interior-point run. The pattern is fixed
/// at construction (AMD ordering, elimination tree, column counts); only the
/// values change between factorizations.
class QuasiDefiniteLdl {
public:
    struct Entry {
        int row = 0; // row >= col (lower triangle of the original matrix)
        int col = 0;
    };

    QuasiDefiniteLdl(int dim, const std::vector<Entry>& pattern, std::vector<int> signs, double pivot_eps = 1e-13,
                     double dynamic_reg = 1e-7)
        : n_(dim), signs_(std::move(signs)), pivot_eps_(pivot_eps), dynamic_reg_(dynamic_reg) {
        order(pattern);
        symbolic();
    }

    /// Number of stored entries; `values` passed to factor() follow the
    /// order of the pattern given at construction.
    [[nodiscard]] std::size_t num_entries() const { return slot_.size(); }

    void factor(const std::vector<double>& values) {
        std::fill(ax_.begin(), ax_.end(), 0.0);
        for (std::size_t e = 0; e < slot_.size(); ++e) {
            ax_[slot_[e]] += values[e];
        }
        numeric();
    }

    /// Solves L D L' x = b in place (b in original ordering).
    void solve(std::vector<double>& b) const {
        std::vector<double> x(b.size());
        for (int i = 0; i < n_; ++i) {
            x[perm_[i]] = b[i];
        }
        for (int j = 0; j < n_; ++j) {
            const double xj = x[j];
            for (int p = lp_[j]; p < lp_[j + 1]; ++p) {
                x[li_[p]] -= lx_[p] * xj;
            }
        }
        for (int j = 0; j < n_; ++j) {
            x[j] /= d_[j];
        }
        for (int j = n_ - 1; j >= 0; --j) {
            double acc = x[j];
            for (int p = lp_[j]; p < lp_[j + 1]; ++p) {
                acc -= lx_[p] * x[li_[p]];
            }
            x[j] = acc;
        }
        for (int i = 0; i < n_; ++i) {
            b[i] = x[perm_[i]];
        }
    }

    [[nodiscard]] std::size_t regularized_pivots() const { return regularized_; }

private:
    void order(const std::vector<Entry>& pattern) {
        // Fill-reducing permutation from the full symmetric pattern.
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(2 * pattern.size() + n_);
        for (const Entry& e : pattern) {
            trip.emplace_back(e.row, e.col, 1.0);
            trip.emplace_back(e.col, e.row, 1.0);
        }
        for (int i = 0; i < n_; ++i) {
            trip.emplace_back(i, i, 1.0);
        }
        Eigen::SparseMatrix<double> full(n_, n_);
        full.setFromTriplets(trip.begin(), trip.end());
        Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
        Eigen::AMDOrdering<int> amd;
        amd(full, pinv);
        const Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> p = pinv.inverse();
        perm_.resize(n_);
        for (int i = 0; i < n_; ++i) {
            perm_[i] = p.indices()[i];
        }
        std::vector<int> psign(n_);
        for (int i = 0; i < n_; ++i) {
            psign[perm_[i]] = signs_[i];
        }
        signs_ = std::move(psign);

        // Upper-triangular CSC of the permuted matrix, diagonal included.
        std::vector<std::vector<int>> cols(n_);
        std::vector<std::pair<int, int>> coords;
        coords.reserve(pattern.size() + n_);
        for (const Entry& e : pattern) {
            const int a = perm_[e.row];
            const int b = perm_[e.col];
            coords.emplace_back(std::min(a, b), std::max(a, b));
        }
        for (int i = 0; i < n_; ++i) {
            coords.emplace_back(i, i);
        }
        for (const auto& [r, c] : coords) {
            cols[c].push_back(r);
        }
        ap_.assign(n_ + 1, 0);
        for (int c = 0; c < n_; ++c) {
            auto& rows = cols[c];
            std::sort(rows.begin(), rows.end());
            rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
            ap_[c + 1] = ap_[c] + static_cast<int>(rows.size());
        }
        ai_.resize(ap_.back());
        for (int c = 0; c < n_; ++c) {
            std::copy(cols[c].begin(), cols[c].end(),
                      ai_.begin() + ap_[c]);
        }
        ax_.assign(ai_.size(), 0.0);
        slot_.resize(pattern.size());
        for (std::size_t e = 0; e < pattern.size(); ++e) {
            const auto [r, c] = coords[e];
            const auto first = ai_.begin() + ap_[c];
            const auto last = ai_.begin() + ap_[c + 1];
            slot_[e] = static_cast<int>(std::lower_bound(first, last, r) - ai_.begin());
        }
    }

    void symbolic() {
        parent_.assign(n_, -1);
        std::vector<int> flag(n_, -1);
        lnz_.assign(n_, 0);
        for (int k = 0; k < n_; ++k) {
            flag[k] = k;
            for (int p = ap_[k]; p < ap_[k + 1]; ++p) {
                int i = ai_[p];
                while (i < k && flag[i] != k) {
                    if (parent_[i] == -1) {
                        parent_[i] = k;
                    }
                    ++lnz_[i];
                    flag[i] = k;
                    i = parent_[i];
                }
            }
        }
        lp_.assign(n_ + 1, 0);
        for (int k = 0; k < n_; ++k) {
            lp_[k + 1] = lp_[k] + lnz_[k];
        }
        li_.assign(lp_.back(), 0);
        lx_.assign(lp_.back(), 0.0);
        d_.assign(n_, 0.0);
        y_.assign(n_, 0.0);
        pattern_.assign(n_, 0);
        flag_.assign(n_, -1);
    }

    void numeric() {
        regularized_ = 0;
        std::fill(lnz_.begin(), lnz_.end(), 0);
        std::fill(flag_.begin(), flag_.end(), -1);
        for (int k = 0; k < n_; ++k) {
            y_[k] = 0.0;
            int top = n_;
            flag_[k] = k;
            for (int p = ap_[k]; p < ap_[k + 1]; ++p) {
                int i = ai_[p];
                y_[i] += ax_[p];
                int len = 0;
                while (flag_[i] != k) {
                    pattern_[len++] = i;
                    flag_[i] = k;
                    i = parent_[i];
                }
                while (len > 0) {
                    pattern_[--top] = pattern_[--len];
                }
            }
            double dk = y_[k];
            y_[k] = 0.0;
            for (; top < n_; ++top) {
                const int i = pattern_[top];
                const double yi = y_[i];
                y_[i] = 0.0;
                const int p2 = lp_[i] + lnz_[i];
                for (int p = lp_[i]; p < p2; ++p) {
                    y_[li_[p]] -= lx_[p] * yi;
                }
                const double lki = yi / d_[i];
                dk -= lki * yi;
                li_[p2] = k;
                lx_[p2] = lki;
                ++lnz_[i];
            }
            const int s = signs_[k];
            if (!(s * dk > pivot_eps_)) {
                dk = s * dynamic_reg_;
                ++regularized_;
            }
            d_[k] = dk;
        }
    }

    int n_;
    std::vector<int> signs_;
    double pivot_eps_;
    double dynamic_reg_;
    std::vector<int> perm_; // perm_[original] = permuted index
    std::vector<int> ap_, ai_, slot_;
    std::vector<double> ax_;
    std::vector<int> parent_, lnz_, lp_, li_;
    std::vector<double> lx_, d_;
    std::size_t regularized_ = 0;
    std::vector<double> y_;
    std::vector<int> pattern_, flag_;
};

} // namespace drsched::lp
