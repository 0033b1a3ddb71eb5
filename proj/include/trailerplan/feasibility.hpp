#pragma once

#include "trailerplan/env.hpp"
#include "trailerplan/model.hpp"
#include "trailerplan/poly.hpp"

#include <string>
#include <vector>

namespace trailerplan
{
    struct FeasibilityTolerances
    {
        double equality = 0.05;        // m/s
        double limit = 1e-2;           // v, a, a_lat, kappa, hinge angle
        double clearance = 0.01;       // m below the wrap radius
        double s_dot = 1e-6;
        double tangent = 1e-3;
        double end_region = 1e-3;      // m outside the region
        double rollout_yaw = 0.1;      // rad
        int per_stamp_factor = 10;     // samples per piece = factor * K
        double rollout_dt = 1e-3;
    };

    /// Worst value seen for each constraint class. Limits are reported as
    /// excess over the bound (<= 0 when satisfied); clearance as the smallest
    /// S(p_ci) - r_i.
    struct FeasibilityReport
    {
        int samples = 0;
        double equality = 0.0;
        double v_excess = -kInf;
        double a_excess = -kInf;
        double alat_excess = -kInf;
        double kappa_excess = -kInf;
        double hinge_excess = -kInf;
        double min_clearance = kInf;
        double min_s_dot = kInf;
        double min_tangent_sq = kInf;
        double end_region = -kInf;
        double rollout_yaw_error = 0.0;
        bool rollout_ok = true;
        double mean_abs_kappa = 0.0;
        double max_abs_kappa = 0.0;
        double length = 0.0;
        std::vector<std::string> failures;

        bool ok() const { return failures.empty(); }
    };

    /// Dense re-sampling of a solved trajectory against every constraint class,
    /// plus an open-loop rollout of (v0, steer) compared with the trailer yaw
    /// splines.
    inline FeasibilityReport checkFeasibility(const FlatTrajectory& traj, const RobotParams& params, const Sdf& sdf,
                                              const TargetRegion& region, const RobotState& start, int stamps,
                                              const FeasibilityTolerances& tol = {})
    {
        FeasibilityReport rep;
        const Limits& lim = params.limits;
        const int n = params.n_trailers;
        const double T = traj.duration();
        const int m = traj.arc.pieces();
        const int per_piece = std::max(1, tol.per_stamp_factor * stamps);
        const int total = m * per_piece;
        double kappa_sum = 0.0;
        double prev_kappa = 0.0;
        Vec2 prev_pos = start.p0;

        for (int idx = 0; idx <= total; idx++)
        {
            const double t = T * idx / total;
            const FlatDerivatives fd = flatDerivatives(traj, t);
            const double n2 = fd.d1.squaredNorm();
            const double nn = std::sqrt(n2);
            const double cr = fd.d1.x() * fd.d2.y() - fd.d1.y() * fd.d2.x();
            const double v0 = fd.s_dot * nn;
            const double acc = fd.s_ddot * nn + fd.s_dot * fd.s_dot * fd.d1.dot(fd.d2) / nn;
            const double kappa = cr / (n2 * nn);
            const double alat = v0 * v0 * kappa;

            rep.min_tangent_sq = std::min(rep.min_tangent_sq, n2);
            rep.min_s_dot = std::min(rep.min_s_dot, fd.s_dot);
            rep.v_excess = std::max(rep.v_excess, v0 - lim.v_max);
            rep.a_excess = std::max(rep.a_excess, std::abs(acc) - lim.a_max);
            rep.alat_excess = std::max(rep.alat_excess, std::abs(alat) - lim.a_lat_max);
            rep.kappa_excess = std::max(rep.kappa_excess, std::abs(kappa) - lim.kappa_max);
            rep.max_abs_kappa = std::max(rep.max_abs_kappa, std::abs(kappa));

            // distance-weighted mean curvature
            const double ds = (fd.pos - prev_pos).norm();
            if (idx > 0)
                kappa_sum += 0.5 * (prev_kappa + std::abs(kappa)) * ds;
            prev_kappa = std::abs(kappa);
            rep.length += ds;
            prev_pos = fd.pos;

            std::vector<double> yaws{std::atan2(fd.d1.y(), fd.d1.x())};
            double v_prev = v0;
            for (int i = 1; i <= n; i++)
            {
                const double th = fd.theta(i - 1);
                const double delta = wrapAngle(yaws.back() - th);
                rep.hinge_excess = std::max(rep.hinge_excess, std::abs(delta) - lim.dtheta_max);
                rep.equality = std::max(rep.equality,
                                        std::abs(fd.theta_dot(i - 1) * params.hitch_lengths[i - 1] - v_prev * std::sin(delta)));
                v_prev *= std::cos(delta);
                yaws.push_back(th);
            }
            const PoseChain chain = poseChain(params, fd.pos, yaws);
            for (int i = 0; i <= n; i++)
                rep.min_clearance = std::min(rep.min_clearance, sdf.query(chain.centers[i]).value - params.wrap_radii[i]);

            if (idx == total)
            {
                for (int i = 0; i <= n; i++)
                {
                    const double c = std::cos(yaws[i]), s = std::sin(yaws[i]);
                    for (const Vec2& q : bodyCorners(params, i))
                    {
                        const Vec2 w = chain.positions[i] + Vec2(c * q.x() - s * q.y(), s * q.x() + c * q.y());
                        for (std::size_t e = 0; e < region.edges(); e++)
                            rep.end_region = std::max(rep.end_region, region.normals[e].dot(w - region.vertices[e]));
                    }
                }
            }
            rep.samples++;
        }
        rep.mean_abs_kappa = rep.length > 0.0 ? kappa_sum / rep.length : 0.0;

        // open-loop rollout of the tractor controls
        const int steps = std::max(1, static_cast<int>(std::ceil(T / tol.rollout_dt)));
        const double dt = T / steps;
        auto controls = [&](double t) {
            const FlatDerivatives fd = flatDerivatives(traj, std::min(t, T));
            const double n2 = fd.d1.squaredNorm();
            const double nn = std::sqrt(n2);
            const double kappa = (fd.d1.x() * fd.d2.y() - fd.d1.y() * fd.d2.x()) / (n2 * nn);
            return Control{fd.s_dot * nn, std::atan(params.wheelbase * kappa)};
        };
        RobotState s0 = start;
        {
            const FlatDerivatives fd = flatDerivatives(traj, 0.0);
            s0.p0 = fd.pos;
            s0.theta0 = std::atan2(fd.d1.y(), fd.d1.x());
            s0.thetas.assign(fd.theta.data(), fd.theta.data() + n);
        }
        try
        {
            const auto trace = rollout(params, s0, controls, dt, steps);
            for (int k = 0; k <= steps; k += std::max(1, steps / 2000))
            {
                const FlatDerivatives fd = flatDerivatives(traj, std::min(k * dt, T));
                for (int i = 0; i < n; i++)
                    rep.rollout_yaw_error =
                        std::max(rep.rollout_yaw_error, std::abs(wrapAngle(trace[k].thetas[i] - fd.theta(i))));
            }
            for (int i = 0; i < n; i++)
            {
                const FlatDerivatives fd = flatDerivatives(traj, T);
                rep.rollout_yaw_error =
                    std::max(rep.rollout_yaw_error, std::abs(wrapAngle(trace.back().thetas[i] - fd.theta(i))));
            }
        }
        catch (const PlanningError& e)
        {
            if (e.code() != ErrorCode::JackknifeDetected)
                throw;
            rep.rollout_ok = false;
        }

        auto check = [&](bool good, const std::string& what, double value) {
            if (!good)
                rep.failures.push_back(what + " " + std::to_string(value));
        };
        check(rep.equality <= tol.equality, "equality residual", rep.equality);
        check(rep.v_excess <= tol.limit, "speed excess", rep.v_excess);
        check(rep.a_excess <= tol.limit, "acceleration excess", rep.a_excess);
        check(rep.alat_excess <= tol.limit, "lateral acceleration excess", rep.alat_excess);
        check(rep.kappa_excess <= tol.limit, "curvature excess", rep.kappa_excess);
        check(n == 0 || rep.hinge_excess <= tol.limit, "hinge angle excess", rep.hinge_excess);
        check(rep.min_clearance >= -tol.clearance, "clearance", rep.min_clearance);
        check(rep.min_s_dot >= -tol.s_dot, "s_dot", rep.min_s_dot);
        check(rep.min_tangent_sq >= params.slack_floor - tol.tangent, "tangent norm", rep.min_tangent_sq);
        check(rep.end_region <= tol.end_region, "end region", rep.end_region);
        check(rep.rollout_ok, "rollout jackknifed", 0.0);
        check(rep.rollout_yaw_error <= tol.rollout_yaw, "rollout yaw error", rep.rollout_yaw_error);
        return rep;
    }
}
