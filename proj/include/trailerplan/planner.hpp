#pragma once

#include "trailerplan/problem.hpp"

#include <chrono>

namespace trailerplan
{
    struct TrajectorySolution
    {
        AlmResult alm;
        DecisionVector decision;
        FlatTrajectory trajectory;
        int pieces = 0;
        int stamps = 0;
        double initial_cost = 0.0;   // objective at the initial guess
        double wall_ms = 0.0;

        bool success() const { return alm.status == AlmStatus::Success; }
    };

    /// Objective of a decision vector without any constraint terms.
    inline double objectiveOf(TrajectoryProblem& problem, const Eigen::VectorXd& x)
    {
        const Eigen::VectorXd none;
        PenaltySink sink(none, none, 1.0, problem.config().alm.smooth_eps);
        return problem.evaluate(x, nullptr, sink);
    }

    /// Initial guess from `path`, then the augmented-Lagrangian solve.
    inline TrajectorySolution solveTrajectory(const RobotParams& params, const RobotState& start, const Sdf& sdf,
                                              const TargetRegion& region, const SearchPath& path,
                                              const SolverConfig& cfg)
    {
        const auto t0 = std::chrono::steady_clock::now();
        const int m = choosePieces(path.length, cfg);
        TrajectoryProblem problem(params, start, sdf, region, m, cfg);
        const DecisionVector guess =
            initialGuess(path, m, problem.layout().omega, problem.params(), cfg.guess_speed_ratio);
        const Eigen::VectorXd x0 = problem.encode(guess);

        TrajectorySolution sol;
        sol.pieces = m;
        sol.stamps = cfg.stamps;
        sol.initial_cost = objectiveOf(problem, x0);
        sol.alm = almSolve(problem, x0, cfg.alm);
        sol.decision = problem.decode(sol.alm.x);
        sol.trajectory = problem.trajectory(sol.alm.x);
        sol.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return sol;
    }
}
