#pragma once

#include "trailerplan/common.hpp"

#include <Eigen/LU>

#include <optional>
#include <vector>

namespace trailerplan
{
    /// Square band matrix with in-place LU (no pivoting). Storage follows the
    /// usual diagonal-major layout: entry (i, j) lives in band row i - j + upper.
    ///
    /// A pivot smaller than kPivotFloor (relative to the largest entry) switches
    /// the solver to a dense partial-pivoting LU of the original matrix.
    class BandedSystem
    {
    public:
        static constexpr double kPivotFloor = 1e-12;

        BandedSystem() = default;
        BandedSystem(int n, int lower, int upper) { resize(n, lower, upper); }

        void resize(int n, int lower, int upper)
        {
            n_ = n;
            lower_ = lower;
            upper_ = upper;
            data_.assign(static_cast<std::size_t>(n) * (lower + upper + 1), 0.0);
            dense_.reset();
            dense_transposed_.reset();
            factorized_ = false;
        }

        int size() const { return n_; }
        bool usedDenseFallback() const { return dense_.has_value(); }

        double operator()(int i, int j) const { return data_[slot(i, j)]; }
        double& operator()(int i, int j) { return data_[slot(i, j)]; }

        bool inBand(int i, int j) const { return i - j <= lower_ && j - i <= upper_; }

        Eigen::MatrixXd toDense() const
        {
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
            for (int i = 0; i < n_; i++)
                for (int j = std::max(0, i - lower_); j <= std::min(n_ - 1, i + upper_); j++)
                    a(i, j) = (*this)(i, j);
            return a;
        }

        void factorize()
        {
            double scale = 0.0;
            for (double v : data_)
                scale = std::max(scale, std::abs(v));
            const std::vector<double> original = data_;
            for (int k = 0; k + 1 < n_; k++)
            {
                const double pivot = (*this)(k, k);
                if (!(std::abs(pivot) > kPivotFloor * std::max(1.0, scale)))
                {
                    fallback(original);
                    return;
                }
                const int i_max = std::min(k + lower_, n_ - 1);
                const int j_max = std::min(k + upper_, n_ - 1);
                for (int i = k + 1; i <= i_max; i++)
                    (*this)(i, k) /= pivot;
                for (int j = k + 1; j <= j_max; j++)
                {
                    const double akj = (*this)(k, j);
                    if (akj == 0.0)
                        continue;
                    for (int i = k + 1; i <= i_max; i++)
                        (*this)(i, j) -= (*this)(i, k) * akj;
                }
            }
            if (n_ > 0 && !(std::abs((*this)(n_ - 1, n_ - 1)) > kPivotFloor * std::max(1.0, scale)))
            {
                fallback(original);
                return;
            }
            factorized_ = true;
        }

        /// Solves A x = b in place; b holds one right-hand side per column.
        template <typename Mat>
        void solve(Mat& b) const
        {
            if (dense_)
            {
                b = dense_->solve(Eigen::MatrixXd(b));
                return;
            }
            for (int j = 0; j < n_; j++)
            {
                const int i_max = std::min(j + lower_, n_ - 1);
                for (int i = j + 1; i <= i_max; i++)
                    b.row(i) -= (*this)(i, j) * b.row(j);
            }
            for (int j = n_ - 1; j >= 0; j--)
            {
                b.row(j) /= (*this)(j, j);
                for (int i = std::max(0, j - upper_); i < j; i++)
                    b.row(i) -= (*this)(i, j) * b.row(j);
            }
        }

        /// Solves A^T x = b in place (A = LU, so U^T then L^T).
        template <typename Mat>
        void solveTranspose(Mat& b) const
        {
            if (dense_)
            {
                b = dense_transposed_->solve(Eigen::MatrixXd(b));
                return;
            }
            for (int j = 0; j < n_; j++)
            {
                for (int i = std::max(0, j - upper_); i < j; i++)
                    b.row(j) -= (*this)(i, j) * b.row(i);
                b.row(j) /= (*this)(j, j);
            }
            for (int j = n_ - 1; j >= 0; j--)
            {
                const int i_max = std::min(j + lower_, n_ - 1);
                for (int i = j + 1; i <= i_max; i++)
                    b.row(j) -= (*this)(i, j) * b.row(i);
            }
        }

    private:
        std::size_t slot(int i, int j) const
        {
            return static_cast<std::size_t>(i - j + upper_) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
        }

        void fallback(const std::vector<double>& original)
        {
            data_ = original;
            const Eigen::MatrixXd a = toDense();
            dense_.emplace(a);
            dense_transposed_.emplace(a.transpose());
            if (!(std::abs(dense_->determinant()) > 0.0))
                throw PlanningError(ErrorCode::SingularSystem, "band matrix is singular");
            factorized_ = true;
        }

        int n_ = 0;
        int lower_ = 0;
        int upper_ = 0;
        std::vector<double> data_;
        bool factorized_ = false;
        std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> dense_;
        std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> dense_transposed_;
    };
}
