#pragma once

#include "trailerplan/common.hpp"

#include <deque>
#include <limits>

namespace trailerplan
{
    struct LbfgsConfig
    {
        int memory = 8;
        double g_epsilon = 1e-6;     // stop when |g|_inf <= g_epsilon * max(1, |x|_inf)
        int past = 3;                // window for the relative-decrease test
        double delta = 1e-8;         // relative decrease over `past` iterations
        int max_iterations = 0;      // 0 = unlimited
        int max_linesearch = 64;
        double f_dec_coeff = 1e-4;   // Armijo
        double s_curv_coeff = 0.9;   // weak Wolfe curvature
        double cautious_factor = 1e-6;
    };

    enum class LbfgsStatus
    {
        Converged,
        Stalled,
        MaxIterations,
        LineSearchFailed,
    };

    inline const char* toString(LbfgsStatus s)
    {
        switch (s)
        {
            case LbfgsStatus::Converged: return "Converged";
            case LbfgsStatus::Stalled: return "Stalled";
            case LbfgsStatus::MaxIterations: return "MaxIterations";
            case LbfgsStatus::LineSearchFailed: return "LineSearchFailed";
        }
        return "Unknown";
    }

    struct LbfgsResult
    {
        Eigen::VectorXd x;
        double f = 0.0;
        LbfgsStatus status = LbfgsStatus::Converged;
        int iterations = 0;
        int evaluations = 0;
    };

    /// Limited-memory BFGS with a Lewis-Overton weak Wolfe line search and the
    /// cautious update of Li and Fukushima. `fg(x, g)` returns f(x) and writes
    /// the gradient into g. Non-finite trial values are treated as too large.
    template <typename Objective>
    LbfgsResult lbfgsMinimize(Objective&& fg, Eigen::VectorXd x0, const LbfgsConfig& cfg = {})
    {
        const Eigen::Index n = x0.size();
        LbfgsResult res;
        res.x = std::move(x0);
        Eigen::VectorXd g(n);
        res.f = fg(res.x, g);
        res.evaluations = 1;
        if (!std::isfinite(res.f) || !g.allFinite())
            throw PlanningError(ErrorCode::NonFiniteObjective, "objective is not finite at the initial point");

        auto gradConverged = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
            const double xn = n > 0 ? x.cwiseAbs().maxCoeff() : 0.0;
            const double gn = n > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
            return gn <= cfg.g_epsilon * std::max(1.0, xn);
        };
        if (gradConverged(res.x, g))
            return res;

        std::deque<Eigen::VectorXd> s_hist, y_hist;
        std::deque<double> rho_hist;
        std::vector<double> f_hist{res.f};
        Eigen::VectorXd d = -g;
        Eigen::VectorXd x_new(n), g_new(n);
        double step = 1.0 / std::max(d.norm(), 1e-12);

        while (true)
        {
            const double f0 = res.f;
            const double dg0 = d.dot(g);
            if (!(dg0 < 0.0))
            {
                // lost descent; restart from steepest descent
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                d = -g;
                step = 1.0 / std::max(d.norm(), 1e-12);
                continue;
            }

            double lo = 0.0, hi = std::numeric_limits<double>::infinity();
            double f_new = 0.0;
            bool accepted = false;
            for (int ls = 0; ls < cfg.max_linesearch; ls++)
            {
                x_new = res.x + step * d;
                f_new = fg(x_new, g_new);
                res.evaluations++;
                if (!std::isfinite(f_new) || !g_new.allFinite() || f_new > f0 + cfg.f_dec_coeff * step * dg0)
                    hi = step;
                else if (g_new.dot(d) < cfg.s_curv_coeff * dg0)
                    lo = step;
                else
                {
                    accepted = true;
                    break;
                }
                step = std::isinf(hi) ? 2.0 * step : 0.5 * (lo + hi);
            }
            if (!accepted)
            {
                // the bracket may still have produced an Armijo point
                if (lo > 0.0)
                {
                    x_new = res.x + lo * d;
                    f_new = fg(x_new, g_new);
                    res.evaluations++;
                    if (std::isfinite(f_new) && f_new < f0)
                    {
                        res.x = x_new;
                        res.f = f_new;
                        g = g_new;
                    }
                }
                res.status = LbfgsStatus::LineSearchFailed;
                return res;
            }

            const Eigen::VectorXd s = x_new - res.x;
            const Eigen::VectorXd y = g_new - g;
            res.x = x_new;
            res.f = f_new;
            g = g_new;
            res.iterations++;

            if (gradConverged(res.x, g))
            {
                res.status = LbfgsStatus::Converged;
                return res;
            }
            f_hist.push_back(res.f);
            if (cfg.past > 0 && static_cast<int>(f_hist.size()) > cfg.past)
            {
                const double past_f = f_hist[f_hist.size() - 1 - cfg.past];
                if ((past_f - res.f) <= cfg.delta * std::max(1.0, std::abs(res.f)))
                {
                    res.status = LbfgsStatus::Stalled;
                    return res;
                }
            }
            if (cfg.max_iterations > 0 && res.iterations >= cfg.max_iterations)
            {
                res.status = LbfgsStatus::MaxIterations;
                return res;
            }

            const double sy = s.dot(y);
            if (sy > cfg.cautious_factor * s.squaredNorm() * g.norm())
            {
                s_hist.push_back(s);
                y_hist.push_back(y);
                rho_hist.push_back(1.0 / sy);
                if (static_cast<int>(s_hist.size()) > cfg.memory)
                {
                    s_hist.pop_front();
                    y_hist.pop_front();
                    rho_hist.pop_front();
                }
            }

            // two-loop recursion
            d = -g;
            const int m = static_cast<int>(s_hist.size());
            std::vector<double> alpha(m);
            for (int i = m - 1; i >= 0; i--)
            {
                alpha[i] = rho_hist[i] * s_hist[i].dot(d);
                d -= alpha[i] * y_hist[i];
            }
            if (m > 0)
                d *= 1.0 / (rho_hist.back() * y_hist.back().squaredNorm());
            for (int i = 0; i < m; i++)
            {
                const double beta = rho_hist[i] * y_hist[i].dot(d);
                d += (alpha[i] - beta) * s_hist[i];
            }
            step = m > 0 ? 1.0 : 1.0 / std::max(d.norm(), 1e-12);
        }
    }
}
