#pragma once

#include "trailerplan/banded.hpp"
#include "trailerplan/common.hpp"
#include "trailerplan/model.hpp"

#include <algorithm>
#include <vector>

namespace trailerplan
{
    /// Piecewise quintic over the natural basis [1, t, ..., t^5]. Piece j
    /// occupies rows 6j..6j+5 of the coefficient matrix and is evaluated in its
    /// local coordinate [0, lengths[j]].
    class QuinticSpline
    {
    public:
        QuinticSpline() = default;
        QuinticSpline(Eigen::VectorXd lengths, Eigen::MatrixXd coeffs)
            : lengths_(std::move(lengths)), coeffs_(std::move(coeffs))
        {
            knots_.resize(lengths_.size() + 1);
            knots_[0] = 0.0;
            for (int j = 0; j < lengths_.size(); j++)
                knots_[j + 1] = knots_[j] + lengths_(j);
        }

        int pieces() const { return static_cast<int>(lengths_.size()); }
        int dim() const { return static_cast<int>(coeffs_.cols()); }
        const Eigen::VectorXd& lengths() const { return lengths_; }
        const Eigen::MatrixXd& coeffs() const { return coeffs_; }
        double total() const { return knots_.empty() ? 0.0 : knots_.back(); }
        /// Domain coordinate where piece j starts.
        double knot(int j) const { return knots_[j]; }

        auto pieceCoeffs(int j) const { return coeffs_.middleRows<6>(6 * j); }

        /// Left-closed piece lookup; the final knot belongs to the last piece.
        std::pair<int, double> locate(double q) const
        {
            const double tol = 1e-9 * std::max(1.0, total());
            if (pieces() == 0 || q < -tol || q > total() + tol)
                throw PlanningError(ErrorCode::OutOfDomain,
                                    "query " + std::to_string(q) + " outside [0, " + std::to_string(total()) + "]");
            auto it = std::upper_bound(knots_.begin(), knots_.end(), q);
            int j = static_cast<int>(it - knots_.begin()) - 1;
            j = std::clamp(j, 0, pieces() - 1);
            return {j, q - knots_[j]};
        }

        /// Derivative of the given order of piece j at local coordinate tau.
        /// Local coordinates outside the piece extrapolate the polynomial.
        Eigen::VectorXd evalPiece(int j, double tau, int order) const
        {
            return pieceCoeffs(j).transpose() * basis(tau, order);
        }

        /// Rows 0..max_order hold the value and its derivatives.
        Eigen::MatrixXd eval(double q, int max_order) const
        {
            const auto [j, tau] = locate(q);
            Eigen::MatrixXd out(max_order + 1, dim());
            for (int k = 0; k <= max_order; k++)
                out.row(k) = evalPiece(j, tau, k).transpose();
            return out;
        }

    private:
        Eigen::VectorXd lengths_;
        Eigen::MatrixXd coeffs_;
        std::vector<double> knots_;
    };

    /// Value and first derivative at both ends; second derivatives are zero.
    struct SplineBoundary
    {
        Eigen::VectorXd start_value;
        Eigen::VectorXd start_deriv;
        Eigen::VectorXd end_value;
        Eigen::VectorXd end_deriv;
    };

    /// Gradient of a scalar with respect to the inputs of a MincoSystem.
    struct MincoGradient
    {
        Eigen::MatrixXd waypoints;  // D x (M - 1)
        Eigen::VectorXd lengths;    // M
        SplineBoundary boundary;
    };

    /// Minimum-jerk quintic spline through interior waypoints with prescribed
    /// boundary value/derivative and zero boundary second derivative. The
    /// 6M x 6M band system M(T) c = b(q, boundary) is factorized once per solve
    /// and reused by `propagate` for the adjoint pass.
    class MincoSystem
    {
    public:
        void solve(const Eigen::MatrixXd& waypoints, const Eigen::VectorXd& lengths, const SplineBoundary& boundary)
        {
            const int m = static_cast<int>(lengths.size());
            if (m < 1)
                throw PlanningError(ErrorCode::InvalidConfig, "spline needs at least one piece");
            if (waypoints.cols() != m - 1)
                throw PlanningError(ErrorCode::InvalidConfig, "waypoint count must equal pieces - 1");
            for (int j = 0; j < m; j++)
                if (!(lengths(j) > 0.0))
                    throw PlanningError(ErrorCode::SingularSystem,
                                        "knot length " + std::to_string(lengths(j)) + " is not positive");
            const int d = static_cast<int>(boundary.start_value.size());

            system_.resize(6 * m, 6, 6);
            Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6 * m, d);
            system_(0, 0) = 1.0;
            system_(1, 1) = 1.0;
            system_(2, 2) = 2.0;
            b.row(0) = boundary.start_value.transpose();
            b.row(1) = boundary.start_deriv.transpose();
            for (int i = 0; i + 1 < m; i++)
            {
                const double t1 = lengths(i), t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
                const int r = 6 * i + 3;
                const int c = 6 * i;
                // third-derivative continuity
                system_(r, c + 3) = 6.0;
                system_(r, c + 4) = 24.0 * t1;
                system_(r, c + 5) = 60.0 * t2;
                system_(r, c + 9) = -6.0;
                // fourth-derivative continuity
                system_(r + 1, c + 4) = 24.0;
                system_(r + 1, c + 5) = 120.0 * t1;
                system_(r + 1, c + 10) = -24.0;
                // waypoint
                system_(r + 2, c) = 1.0;
                system_(r + 2, c + 1) = t1;
                system_(r + 2, c + 2) = t2;
                system_(r + 2, c + 3) = t3;
                system_(r + 2, c + 4) = t4;
                system_(r + 2, c + 5) = t5;
                b.row(r + 2) = waypoints.col(i).transpose();
                // value continuity
                system_(r + 3, c) = 1.0;
                system_(r + 3, c + 1) = t1;
                system_(r + 3, c + 2) = t2;
                system_(r + 3, c + 3) = t3;
                system_(r + 3, c + 4) = t4;
                system_(r + 3, c + 5) = t5;
                system_(r + 3, c + 6) = -1.0;
                // first-derivative continuity
                system_(r + 4, c + 1) = 1.0;
                system_(r + 4, c + 2) = 2.0 * t1;
                system_(r + 4, c + 3) = 3.0 * t2;
                system_(r + 4, c + 4) = 4.0 * t3;
                system_(r + 4, c + 5) = 5.0 * t4;
                system_(r + 4, c + 7) = -1.0;
                // second-derivative continuity
                system_(r + 5, c + 2) = 2.0;
                system_(r + 5, c + 3) = 6.0 * t1;
                system_(r + 5, c + 4) = 12.0 * t2;
                system_(r + 5, c + 5) = 20.0 * t3;
                system_(r + 5, c + 8) = -2.0;
            }
            {
                const double t1 = lengths(m - 1), t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
                const int r = 6 * m - 3;
                const int c = 6 * (m - 1);
                system_(r, c) = 1.0;
                system_(r, c + 1) = t1;
                system_(r, c + 2) = t2;
                system_(r, c + 3) = t3;
                system_(r, c + 4) = t4;
                system_(r, c + 5) = t5;
                system_(r + 1, c + 1) = 1.0;
                system_(r + 1, c + 2) = 2.0 * t1;
                system_(r + 1, c + 3) = 3.0 * t2;
                system_(r + 1, c + 4) = 4.0 * t3;
                system_(r + 1, c + 5) = 5.0 * t4;
                system_(r + 2, c + 2) = 2.0;
                system_(r + 2, c + 3) = 6.0 * t1;
                system_(r + 2, c + 4) = 12.0 * t2;
                system_(r + 2, c + 5) = 20.0 * t3;
                b.row(r) = boundary.end_value.transpose();
                b.row(r + 1) = boundary.end_deriv.transpose();
            }
            matrix_copy_ = system_;
            system_.factorize();
            system_.solve(b);
            spline_ = QuinticSpline(lengths, std::move(b));
        }

        const QuinticSpline& spline() const { return spline_; }

        /// The assembled (unfactorized) band matrix of the last solve.
        const BandedSystem& matrix() const { return matrix_copy_; }
        bool usedDenseFallback() const { return system_.usedDenseFallback(); }

        /// Chains dF/dc (6M x D) and the explicit dF/dT (M) through M(T) c = b.
        MincoGradient propagate(const Eigen::MatrixXd& grad_coeffs, const Eigen::VectorXd& grad_lengths) const
        {
            const int m = spline_.pieces();
            const int d = spline_.dim();
            Eigen::MatrixXd adj = grad_coeffs;
            system_.solveTranspose(adj);

            MincoGradient g;
            g.waypoints.resize(d, m - 1);
            g.lengths = grad_lengths;
            for (int i = 0; i < m; i++)
            {
                const double t = spline_.lengths()(i);
                const Eigen::VectorXd d1 = spline_.evalPiece(i, t, 1);
                const Eigen::VectorXd d2 = spline_.evalPiece(i, t, 2);
                const Eigen::VectorXd d3 = spline_.evalPiece(i, t, 3);
                if (i + 1 < m)
                {
                    const int r = 6 * i + 3;
                    const Eigen::VectorXd d4 = spline_.evalPiece(i, t, 4);
                    const Eigen::VectorXd d5 = spline_.evalPiece(i, t, 5);
                    g.lengths(i) -= adj.row(r).dot(d4) + adj.row(r + 1).dot(d5) +
                                    adj.row(r + 2).dot(d1) + adj.row(r + 3).dot(d1) +
                                    adj.row(r + 4).dot(d2) + adj.row(r + 5).dot(d3);
                    g.waypoints.col(i) = adj.row(r + 2).transpose();
                }
                else
                {
                    const int r = 6 * m - 3;
                    g.lengths(i) -= adj.row(r).dot(d1) + adj.row(r + 1).dot(d2) + adj.row(r + 2).dot(d3);
                }
            }
            g.boundary.start_value = adj.row(0).transpose();
            g.boundary.start_deriv = adj.row(1).transpose();
            g.boundary.end_value = adj.row(6 * m - 3).transpose();
            g.boundary.end_deriv = adj.row(6 * m - 2).transpose();
            return g;
        }

    private:
        BandedSystem system_;
        BandedSystem matrix_copy_;
        QuinticSpline spline_;
    };

    inline QuinticSpline mincoSolve(const Eigen::MatrixXd& waypoints, const Eigen::VectorXd& lengths,
                                    const SplineBoundary& boundary)
    {
        MincoSystem sys;
        sys.solve(waypoints, lengths, boundary);
        return sys.spline();
    }

    struct JerkEnergy
    {
        double cost = 0.0;
        Eigen::MatrixXd grad_coeffs;   // 6M x D
        Eigen::VectorXd grad_lengths;  // M
    };

    /// Closed-form sum over pieces of the weighted integral of the squared
    /// third derivative; `weights` holds one diagonal entry per dimension.
    inline JerkEnergy jerkEnergy(const QuinticSpline& spline, const Eigen::VectorXd& weights)
    {
        JerkEnergy e;
        const int m = spline.pieces();
        const int d = spline.dim();
        e.grad_coeffs = Eigen::MatrixXd::Zero(6 * m, d);
        e.grad_lengths = Eigen::VectorXd::Zero(m);
        for (int j = 0; j < m; j++)
        {
            const double t1 = spline.lengths()(j), t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
            for (int k = 0; k < d; k++)
            {
                const double w = weights(k);
                const double c3 = spline.coeffs()(6 * j + 3, k);
                const double c4 = spline.coeffs()(6 * j + 4, k);
                const double c5 = spline.coeffs()(6 * j + 5, k);
                e.cost += w * (36.0 * c3 * c3 * t1 + 144.0 * c3 * c4 * t2 + 192.0 * c4 * c4 * t3 +
                               240.0 * c3 * c5 * t3 + 720.0 * c4 * c5 * t4 + 720.0 * c5 * c5 * t5);
                e.grad_coeffs(6 * j + 3, k) = w * (72.0 * c3 * t1 + 144.0 * c4 * t2 + 240.0 * c5 * t3);
                e.grad_coeffs(6 * j + 4, k) = w * (144.0 * c3 * t2 + 384.0 * c4 * t3 + 720.0 * c5 * t4);
                e.grad_coeffs(6 * j + 5, k) = w * (240.0 * c3 * t3 + 720.0 * c4 * t4 + 1440.0 * c5 * t5);
                e.grad_lengths(j) += w * (36.0 * c3 * c3 + 288.0 * c3 * c4 * t1 + 576.0 * c4 * c4 * t2 +
                                          720.0 * c3 * c5 * t2 + 2880.0 * c4 * c5 * t3 + 3600.0 * c5 * c5 * t4);
            }
        }
        return e;
    }

    /// Tractor path x0(s), y0(s) over the slackened arc length s, its time law
    /// s(t), and the trailer yaws theta(t). xy piece j is traversed during time
    /// piece j of s(t).
    struct FlatTrajectory
    {
        QuinticSpline xy;      // D = 2 over s, piece lengths S
        QuinticSpline arc;     // D = 1 over t, M pieces of duration T_f / M
        QuinticSpline thetas;  // D = N over t, Omega pieces of duration T_f / Omega

        double duration() const { return arc.total(); }
        double arcLength() const { return xy.total(); }
    };

    /// Raw derivatives of the flat outputs at time t.
    struct FlatDerivatives
    {
        int piece = 0;
        double s = 0.0, s_dot = 0.0, s_ddot = 0.0;
        Vec2 pos = Vec2::Zero(), d1 = Vec2::Zero(), d2 = Vec2::Zero();
        Eigen::VectorXd theta, theta_dot;
    };

    inline FlatDerivatives flatDerivatives(const FlatTrajectory& traj, double t)
    {
        FlatDerivatives out;
        const auto [j, tau] = traj.arc.locate(t);
        out.piece = j;
        out.s = traj.arc.evalPiece(j, tau, 0)(0);
        out.s_dot = traj.arc.evalPiece(j, tau, 1)(0);
        out.s_ddot = traj.arc.evalPiece(j, tau, 2)(0);
        const double sigma = out.s - traj.xy.knot(j);
        out.pos = traj.xy.evalPiece(j, sigma, 0);
        out.d1 = traj.xy.evalPiece(j, sigma, 1);
        out.d2 = traj.xy.evalPiece(j, sigma, 2);
        if (traj.thetas.dim() > 0)
        {
            const auto [k, tk] = traj.thetas.locate(std::min(t, traj.thetas.total()));
            out.theta = traj.thetas.evalPiece(k, tk, 0);
            out.theta_dot = traj.thetas.evalPiece(k, tk, 1);
        }
        else
        {
            out.theta.resize(0);
            out.theta_dot.resize(0);
        }
        return out;
    }

    struct ComposedState
    {
        RobotState state;
        FlatSample sample;
        std::vector<double> theta_rates;
        double s_dot = 0.0;
        double tangent_sq = 0.0;  // |d(x0, y0)/ds|^2
    };

    /// Full robot state at time t via the chain rule through s(t).
    inline ComposedState composedState(const FlatTrajectory& traj, double t, const RobotParams& params)
    {
        const FlatDerivatives fd = flatDerivatives(traj, t);
        ComposedState out;
        out.sample = flatEval(fd.d1.x(), fd.d1.y(), fd.d2.x(), fd.d2.y(), fd.s_dot, fd.s_ddot,
                              params.wheelbase, params.slack_floor);
        out.state.p0 = fd.pos;
        out.state.v0 = out.sample.v0;
        out.state.theta0 = out.sample.theta0;
        out.state.thetas.assign(fd.theta.data(), fd.theta.data() + fd.theta.size());
        out.theta_rates.assign(fd.theta_dot.data(), fd.theta_dot.data() + fd.theta_dot.size());
        out.s_dot = fd.s_dot;
        out.tangent_sq = fd.d1.squaredNorm();
        return out;
    }
}
