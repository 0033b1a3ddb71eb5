#pragma once

#include "trailerplan/lbfgs.hpp"

#include <chrono>
#include <vector>

namespace trailerplan
{
    /// C2 replacement for max(0, z)^2: cubic on [0, eps], shifted quadratic
    /// beyond.
    inline double smoothHinge(double z, double eps, double& dz)
    {
        if (z <= 0.0)
        {
            dz = 0.0;
            return 0.0;
        }
        if (z < eps)
        {
            dz = z * z / eps;
            return z * z * z / (3.0 * eps);
        }
        dz = 2.0 * z - eps;
        return z * z - eps * z + eps * eps / 3.0;
    }

    /// Collects constraint values in a fixed visiting order and returns, for
    /// each one, the derivative of the augmented Lagrangian with respect to
    /// it. Missing multipliers are read as zero.
    class PenaltySink
    {
    public:
        PenaltySink(const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu, double rho, double eps)
            : lambda_(lambda), mu_(mu), rho_(rho), eps_(eps) {}

        double equality(double h)
        {
            const double l = eq_.size() < static_cast<std::size_t>(lambda_.size()) ? lambda_(eq_.size()) : 0.0;
            eq_.push_back(h);
            value_ += l * h + 0.5 * rho_ * h * h;
            return l + rho_ * h;
        }

        double inequality(double g)
        {
            const double m = ineq_.size() < static_cast<std::size_t>(mu_.size()) ? mu_(ineq_.size()) : 0.0;
            ineq_.push_back(g);
            double dz = 0.0;
            value_ += 0.5 * rho_ * smoothHinge(g + m / rho_, eps_, dz) - 0.5 * m * m / rho_;
            return 0.5 * rho_ * dz;
        }

        double value() const { return value_; }
        const std::vector<double>& equalities() const { return eq_; }
        const std::vector<double>& inequalities() const { return ineq_; }

    private:
        const Eigen::VectorXd& lambda_;
        const Eigen::VectorXd& mu_;
        double rho_;
        double eps_;
        double value_ = 0.0;
        std::vector<double> eq_;
        std::vector<double> ineq_;
    };

    struct AlmConfig
    {
        double rho_init = 1.0;
        double rho_growth = 3.0;
        double rho_max = 1e6;
        double shrink = 0.5;
        double violation_tol = 1e-3;
        int max_outer = 50;
        double smooth_eps = 1e-4;
        LbfgsConfig inner;
    };

    struct AlmIteration
    {
        int outer = 0;
        double cost = 0.0;
        double eq_violation = 0.0;
        double ineq_violation = 0.0;
        double rho = 0.0;
        int inner_iterations = 0;
        LbfgsStatus inner_status = LbfgsStatus::Converged;
        double wall_ms = 0.0;
    };

    enum class AlmStatus
    {
        Success,
        MaxOuterIterations,
        InnerSolveFailure,
    };

    inline const char* toString(AlmStatus s)
    {
        switch (s)
        {
            case AlmStatus::Success: return "Success";
            case AlmStatus::MaxOuterIterations: return "MaxOuterIterations";
            case AlmStatus::InnerSolveFailure: return "InnerSolveFailure";
        }
        return "Unknown";
    }

    struct AlmResult
    {
        Eigen::VectorXd x;
        AlmStatus status = AlmStatus::MaxOuterIterations;
        double cost = 0.0;
        double violation = 0.0;
        Eigen::VectorXd lambda;
        Eigen::VectorXd mu;
        double rho = 0.0;
        std::vector<AlmIteration> history;
    };

    struct Violation
    {
        double eq = 0.0;
        double ineq = 0.0;
        double max() const { return std::max(eq, ineq); }
    };

    inline Violation violationOf(const PenaltySink& sink)
    {
        Violation v;
        for (double h : sink.equalities())
            v.eq = std::max(v.eq, std::abs(h));
        for (double g : sink.inequalities())
            v.ineq = std::max(v.ineq, g);
        return v;
    }

    /// PHR augmented Lagrangian around L-BFGS. `problem.evaluate(x, grad, sink)`
    /// returns the objective, pushes every constraint through `sink` and, when
    /// grad is non-null, writes the gradient of objective + sink penalties.
    template <typename Problem>
    AlmResult almSolve(Problem& problem, Eigen::VectorXd x0, const AlmConfig& cfg)
    {
        using Clock = std::chrono::steady_clock;
        AlmResult res;
        res.x = std::move(x0);
        res.rho = cfg.rho_init;

        auto measure = [&](const Eigen::VectorXd& x, double& cost) {
            PenaltySink sink(res.lambda, res.mu, res.rho, cfg.smooth_eps);
            cost = problem.evaluate(x, nullptr, sink);
            const Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(sink.equalities().data(), sink.equalities().size());
            const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(sink.inequalities().data(), sink.inequalities().size());
            return std::tuple(violationOf(sink), h, g);
        };

        double cost = 0.0;
        auto [viol0, h0, g0] = measure(res.x, cost);
        if (!std::isfinite(cost))
            throw PlanningError(ErrorCode::NonFiniteObjective, "objective is not finite at the initial guess");
        res.lambda = Eigen::VectorXd::Zero(h0.size());
        res.mu = Eigen::VectorXd::Zero(g0.size());
        double prev_violation = viol0.max();

        for (int outer = 1; outer <= cfg.max_outer; outer++)
        {
            const auto t0 = Clock::now();
            auto lagrangian = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
                PenaltySink sink(res.lambda, res.mu, res.rho, cfg.smooth_eps);
                const double f = problem.evaluate(x, &grad, sink);
                return f + sink.value();
            };
            LbfgsResult inner;
            try
            {
                inner = lbfgsMinimize(lagrangian, res.x, cfg.inner);
            }
            catch (const PlanningError& e)
            {
                if (e.code() != ErrorCode::NonFiniteObjective)
                    throw;
                res.status = AlmStatus::InnerSolveFailure;
                return res;
            }
            res.x = inner.x;
            auto [viol, h, g] = measure(res.x, cost);

            AlmIteration it;
            it.outer = outer;
            it.cost = cost;
            it.eq_violation = viol.eq;
            it.ineq_violation = viol.ineq;
            it.rho = res.rho;
            it.inner_iterations = inner.iterations;
            it.inner_status = inner.status;
            it.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
            res.history.push_back(it);
            res.cost = cost;
            res.violation = viol.max();

            const bool inner_ok = inner.status == LbfgsStatus::Converged || inner.status == LbfgsStatus::Stalled;
            if (res.violation < cfg.violation_tol && inner_ok)
            {
                res.status = AlmStatus::Success;
                return res;
            }

            res.lambda += res.rho * h;
            res.mu = (res.mu + res.rho * g).cwiseMax(0.0);
            if (res.violation >= cfg.violation_tol && res.violation > cfg.shrink * prev_violation)
                res.rho = std::min(res.rho * cfg.rho_growth, cfg.rho_max);
            prev_violation = res.violation;
        }
        res.status = AlmStatus::MaxOuterIterations;
        return res;
    }
}
