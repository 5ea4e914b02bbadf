#pragma once
//
// Golub-Kahan-Lanczos bidiagonalization of a sparse binary matrix with full
// (two-pass classical Gram-Schmidt) reorthogonalization.
//
// After k steps the factorization satisfies
//
//     A V_{k+1} = U_k B_k,     B_k = U_k^T A V_{k+1}
//
// with B_k upper bidiagonal, k x (k+1) (k x k once V spans R^n). B_k is a
// compression of A, so its singular values interlace from below with those
// of A. When the process reaches min(m, n) steps one of the bases spans its
// whole space and the singular values of B_k are those of A.
//
// Breakdowns (an invariant subspace, or A v falling inside span U) are
// continued with a fresh random direction orthogonal to the current basis;
// the corresponding entry of B is set to zero. This picks up repeated
// singular values a single Krylov sequence cannot see.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "nci/corpus.hpp"

namespace nci {

class BidiagonalLanczos {
public:
    explicit BidiagonalLanczos(const EntityMatrix& a, std::uint64_t seed = 0x5eed1a2c3b4dULL)
        : a_(a), rng_(make_stream(seed)), limit_(std::min(a.rows(), a.cols())) {
        scale_ = std::sqrt(double(a.nnz()));
        if (limit_ == 0) return;
        std::vector<double> v(a.cols());
        if (!random_orthogonal(v_, v)) {
            limit_ = 0;
            return;
        }
        v_.push_back(std::move(v));
    }

    /// Runs up to `count` more steps; returns the number performed.
    std::size_t extend(std::size_t count) {
        std::size_t done = 0;
        while (done < count && steps() < limit_ && !stalled_) {
            step();
            ++done;
        }
        return done;
    }

    std::size_t steps() const { return alpha_.size(); }

    /// Largest possible step count, min(m, n).
    std::size_t limit() const { return limit_; }

    /// True when the factorization represents A exactly.
    bool complete() const { return steps() == limit_; }

    /// Coupling beta_k to the next right vector; U_k^T A = B_k V_k^T + beta_k e_k v_{k+1}^T.
    double residual() const { return beta_.empty() ? 0.0 : beta_.back(); }

    /// No further directions could be generated before `limit()`.
    bool stalled() const { return stalled_; }

    /// The current k x (k+1) (or k x k) bidiagonal projection.
    Eigen::MatrixXd projection() const {
        const auto k = steps();
        const auto cols = std::min(k + 1, v_.size());
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(Eigen::Index(k), Eigen::Index(cols));
        for (std::size_t i = 0; i < k; ++i) {
            b(Eigen::Index(i), Eigen::Index(i)) = alpha_[i];
            if (i + 1 < cols) b(Eigen::Index(i), Eigen::Index(i + 1)) = beta_[i];
        }
        return b;
    }

    /// Singular values of the projection, descending.
    std::vector<double> ritz_values() const {
        if (steps() == 0) return {};
        Eigen::BDCSVD<Eigen::MatrixXd> svd(projection());
        const auto& s = svd.singularValues();
        std::vector<double> out(s.data(), s.data() + s.size());
        std::sort(out.begin(), out.end(), std::greater<>());
        return out;
    }

private:
    using Vec = std::vector<double>;

    static double dot(const Vec& x, const Vec& y) {
        return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
    }

    static double norm(const Vec& x) { return std::sqrt(dot(x, x)); }

    static void orthogonalize(const std::vector<Vec>& basis, Vec& w) {
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                const double c = dot(q, w);
                for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c * q[i];
            }
        }
    }

    bool random_orthogonal(const std::vector<Vec>& basis, Vec& out) {
        std::normal_distribution<double> normal;
        for (int attempt = 0; attempt < 8; ++attempt) {
            for (auto& x : out) x = normal(rng_);
            const double before = norm(out);
            orthogonalize(basis, out);
            const double after = norm(out);
            if (after > 1e-6 * before) {
                for (auto& x : out) x /= after;
                return true;
            }
        }
        return false;
    }

    void step() {
        const std::size_t j = steps();
        const double threshold = 1e-13 * std::max(1.0, scale_);

        // left vector: u_j ~ A v_j - beta_{j-1} u_{j-1}
        Vec w(a_.rows());
        a_.multiply(v_[j], w);
        if (j > 0)
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= beta_[j - 1] * u_[j - 1][i];
        orthogonalize(u_, w);
        double alpha = norm(w);
        if (alpha > threshold) {
            for (auto& x : w) x /= alpha;
        } else {
            alpha = 0.0;
            if (!random_orthogonal(u_, w)) {
                stalled_ = true;
                return;
            }
        }
        u_.push_back(std::move(w));
        alpha_.push_back(alpha);

        // right vector: v_{j+1} ~ A^T u_j - alpha_j v_j
        if (v_.size() == a_.cols()) {
            beta_.push_back(0.0);
            return;
        }
        Vec z(a_.cols());
        a_.multiply_transposed(u_[j], z);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] -= alpha * v_[j][i];
        orthogonalize(v_, z);
        double beta = norm(z);
        if (beta > threshold) {
            for (auto& x : z) x /= beta;
        } else {
            beta = 0.0;
            if (!random_orthogonal(v_, z)) {
                beta_.push_back(0.0);
                if (steps() < limit_) stalled_ = true;
                return;
            }
        }
        v_.push_back(std::move(z));
        beta_.push_back(beta);
    }

    const EntityMatrix& a_;
    Rng rng_;
    std::size_t limit_;
    double scale_ = 0.0;
    bool stalled_ = false;
    std::vector<Vec> u_, v_;
    std::vector<double> alpha_, beta_;
};

}  // namespace nci
