#pragma once

#include "trailerplan/common.hpp"

#include <array>
#include <span>
#include <vector>

namespace trailerplan
{
    struct BodySize
    {
        double length = 0.4;
        double width = 0.4;
    };

    struct Limits
    {
        double v_max = 2.0;          // v_mlon, m/s
        double a_max = 2.0;          // a_mlon, m/s^2
        double a_lat_max = 2.0;      // a_mlat, m/s^2
        double kappa_max = 1.0;      // 1/m
        double dtheta_max = 1.47;    // jackknife bound, rad
        double steer_max = 0.7;      // rad
    };

    /// Geometry and feasibility limits of a tractor towing N on-axle trailers.
    ///
    /// Vehicle 0 is the tractor; p0 is its rear-axle center, which is also the
    /// hitch point of trailer 1. Trailer i sits hitch_lengths[i-1] behind the
    /// center of vehicle i-1.
    struct RobotParams
    {
        int n_trailers = 0;
        double wheelbase = 0.5;
        std::vector<double> hitch_lengths;
        double rear_offset = 0.25;   // rear axle -> tractor body center
        double tractor_length = 0.6;
        std::vector<BodySize> body_sizes;  // N + 1 entries
        std::vector<double> wrap_radii;    // N + 1 entries
        Limits limits;
        double veh_clearance = 0.5;
        double slack_floor = 0.9;

        int vehicles() const { return n_trailers + 1; }

        void validate() const
        {
            auto fail = [](const std::string& what) { throw PlanningError(ErrorCode::InvalidConfig, what); };
            if (n_trailers < 0)
                fail("n_trailers must be >= 0");
            if (static_cast<int>(hitch_lengths.size()) != n_trailers)
                fail("hitch_lengths must have n_trailers entries");
            if (static_cast<int>(body_sizes.size()) != vehicles())
                fail("body_sizes must have n_trailers + 1 entries");
            if (static_cast<int>(wrap_radii.size()) != vehicles())
                fail("wrap_radii must have n_trailers + 1 entries");
            if (!(wheelbase > 0.0) || !(rear_offset > 0.0) || !(tractor_length > 0.0))
                fail("lengths must be positive");
            for (double l : hitch_lengths)
                if (!(l > 0.0))
                    fail("hitch lengths must be positive");
            for (const auto& b : body_sizes)
                if (!(b.length > 0.0) || !(b.width > 0.0))
                    fail("body sizes must be positive");
            for (double r : wrap_radii)
                if (!(r > 0.0))
                    fail("wrap radii must be positive");
            const Limits& l = limits;
            if (!(l.v_max > 0.0) || !(l.a_max > 0.0) || !(l.a_lat_max > 0.0) || !(l.kappa_max > 0.0) ||
                !(l.steer_max > 0.0) || !(l.steer_max < kPi / 2.0))
                fail("limits must be positive");
            if (!(l.dtheta_max > 0.0) || l.dtheta_max > kPi / 2.0)
                fail("dtheta_max must lie in (0, pi/2]");
            if (!(slack_floor > 0.0) || slack_floor > 1.0)
                fail("slack_floor must lie in (0, 1]");
            if (l.kappa_max > std::tan(l.steer_max) / wheelbase + 1e-12)
                fail("kappa_max exceeds the curvature reachable with steer_max");
            if (!(veh_clearance >= 0.0))
                fail("veh_clearance must be >= 0");
        }
    };

    /// Robot used in the randomized benchmark worlds: 0.6 x 0.4 m tractor,
    /// 0.4 x 0.4 m trailers, 0.5 m wheelbase, 0.7 rad steering.
    inline RobotParams benchmarkRobot(int n_trailers)
    {
        RobotParams p;
        p.n_trailers = n_trailers;
        p.wheelbase = 0.5;
        p.rear_offset = 0.25;
        p.tractor_length = 0.6;
        p.hitch_lengths.assign(n_trailers, 0.5);
        p.body_sizes.push_back({0.6, 0.4});
        for (int i = 0; i < n_trailers; i++)
            p.body_sizes.push_back({0.4, 0.4});
        for (const auto& b : p.body_sizes)
            p.wrap_radii.push_back(0.5 * std::hypot(b.length, b.width));
        p.limits.v_max = 2.0;
        p.limits.a_max = 2.0;
        p.limits.a_lat_max = 2.0;
        p.limits.steer_max = 0.7;
        p.limits.kappa_max = std::tan(0.7) / 0.5;
        p.limits.dtheta_max = 1.47;
        p.veh_clearance = 0.5;
        p.slack_floor = 0.9;
        return p;
    }

    struct RobotState
    {
        Vec2 p0 = Vec2::Zero();
        double v0 = 0.0;
        double theta0 = 0.0;
        std::vector<double> thetas;

        /// theta0 followed by the trailer yaws.
        std::vector<double> yaws() const
        {
            std::vector<double> y{theta0};
            y.insert(y.end(), thetas.begin(), thetas.end());
            return y;
        }
    };

    struct FlatSample
    {
        double theta0 = 0.0;
        double v0 = 0.0;
        double a = 0.0;
        double kappa = 0.0;
        double a_lat = 0.0;
        double steer = 0.0;
    };

    struct Control
    {
        double v0 = 0.0;
        double steer = 0.0;
    };

    /// Yaw rates of the trailers. The longitudinal speed of each vehicle is
    /// v_i = v_{i-1} cos(theta_{i-1} - theta_i).
    inline std::vector<double> trailerRates(const RobotParams& params, const RobotState& state)
    {
        std::vector<double> rates(params.n_trailers, 0.0);
        double v_prev = state.v0;
        double th_prev = state.theta0;
        for (int i = 0; i < params.n_trailers; i++)
        {
            const double d = th_prev - state.thetas[i];
            rates[i] = v_prev * std::sin(d) / params.hitch_lengths[i];
            v_prev *= std::cos(d);
            th_prev = state.thetas[i];
        }
        return rates;
    }

    /// Physical variables of the tractor from the slackened-arc-length flat
    /// output: (dx, dy, ddx, ddy) are derivatives of x0, y0 with respect to the
    /// slackened arc length, (s_dot, s_ddot) its time derivatives.
    inline FlatSample flatEval(double dx, double dy, double ddx, double ddy,
                               double s_dot, double s_ddot,
                               double wheelbase, double slack_floor)
    {
        const double n2 = dx * dx + dy * dy;
        if (!(n2 >= slack_floor))
            throw PlanningError(ErrorCode::DegenerateTangent,
                                "squared tangent norm " + std::to_string(n2) + " below slack floor");
        const double n = std::sqrt(n2);
        FlatSample out;
        out.theta0 = std::atan2(dy, dx);
        out.v0 = s_dot * n;
        out.a = s_ddot * n + s_dot * s_dot * (dx * ddx + dy * ddy) / n;
        out.kappa = (dx * ddy - dy * ddx) / (n2 * n);
        out.a_lat = out.v0 * out.v0 * out.kappa;
        out.steer = std::atan(wheelbase * out.kappa);
        return out;
    }

    struct PoseChain
    {
        std::vector<Vec2> positions;  // p_0 ... p_N
        std::vector<Vec2> centers;    // p_c0 ... p_cN
    };

    inline PoseChain poseChain(const RobotParams& params, const Vec2& p0, std::span<const double> yaws)
    {
        PoseChain chain;
        chain.positions.reserve(params.vehicles());
        chain.centers.reserve(params.vehicles());
        chain.positions.push_back(p0);
        chain.centers.push_back(p0 + params.rear_offset * heading(yaws[0]));
        for (int i = 1; i <= params.n_trailers; i++)
        {
            Vec2 p = chain.positions.back() - params.hitch_lengths[i - 1] * heading(yaws[i]);
            chain.positions.push_back(p);
            chain.centers.push_back(p);
        }
        return chain;
    }

    /// Corners of vehicle i in its body frame, counter-clockwise, with the
    /// origin at p_i (rear axle for the tractor, trailer center otherwise).
    inline std::array<Vec2, 4> bodyCorners(const RobotParams& params, int i)
    {
        const BodySize& b = params.body_sizes[i];
        const double cx = i == 0 ? params.rear_offset : 0.0;
        const double hl = 0.5 * b.length;
        const double hw = 0.5 * b.width;
        return {Vec2(cx - hl, -hw), Vec2(cx + hl, -hw), Vec2(cx + hl, hw), Vec2(cx - hl, hw)};
    }

    namespace detail
    {
        // (x0, y0, theta0, theta1..thetaN)
        inline Eigen::VectorXd kinematicsRhs(const RobotParams& params, const Eigen::VectorXd& s, const Control& u)
        {
            Eigen::VectorXd ds(s.size());
            ds(0) = u.v0 * std::cos(s(2));
            ds(1) = u.v0 * std::sin(s(2));
            ds(2) = u.v0 * std::tan(u.steer) / params.wheelbase;
            double v_prev = u.v0;
            for (int i = 0; i < params.n_trailers; i++)
            {
                const double d = s(2 + i) - s(3 + i);
                ds(3 + i) = v_prev * std::sin(d) / params.hitch_lengths[i];
                v_prev *= std::cos(d);
            }
            return ds;
        }
    }

    /// Integrates the kinematic model with classical RK4 at fixed dt.
    /// `controls(t)` returns the (v0, steer) input at time t. The trace holds
    /// steps + 1 states, starting with `start`.
    template <typename ControlFn>
    std::vector<RobotState> rollout(const RobotParams& params, const RobotState& start,
                                    ControlFn&& controls, double dt, int steps)
    {
        if (!(dt > 0.0))
            throw PlanningError(ErrorCode::InvalidConfig, "rollout dt must be positive");
        const int n = params.n_trailers;
        Eigen::VectorXd s(3 + n);
        s << start.p0.x(), start.p0.y(), start.theta0,
            Eigen::Map<const Eigen::VectorXd>(start.thetas.data(), n);

        auto toState = [&](const Eigen::VectorXd& x, double v) {
            RobotState st;
            st.p0 = Vec2(x(0), x(1));
            st.v0 = v;
            st.theta0 = x(2);
            st.thetas.assign(x.data() + 3, x.data() + 3 + n);
            return st;
        };
        auto checkJackknife = [&](const Eigen::VectorXd& x, double t) {
            for (int i = 0; i < n; i++)
                if (std::abs(wrapAngle(x(2 + i) - x(3 + i))) >= kPi / 2.0)
                    throw PlanningError(ErrorCode::JackknifeDetected,
                                        "hinge " + std::to_string(i + 1) + " at t=" + std::to_string(t));
        };

        std::vector<RobotState> trace;
        trace.reserve(steps + 1);
        checkJackknife(s, 0.0);
        trace.push_back(toState(s, controls(0.0).v0));
        for (int k = 0; k < steps; k++)
        {
            const double t = k * dt;
            const Control u0 = controls(t);
            const Control um = controls(t + 0.5 * dt);
            const Control u1 = controls(t + dt);
            const Eigen::VectorXd k1 = detail::kinematicsRhs(params, s, u0);
            const Eigen::VectorXd k2 = detail::kinematicsRhs(params, s + 0.5 * dt * k1, um);
            const Eigen::VectorXd k3 = detail::kinematicsRhs(params, s + 0.5 * dt * k2, um);
            const Eigen::VectorXd k4 = detail::kinematicsRhs(params, s + dt * k3, u1);
            s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            checkJackknife(s, t + dt);
            trace.push_back(toState(s, u1.v0));
        }
        return trace;
    }

    /// Rollout driven by controls sampled every dt; midpoints are linearly
    /// interpolated and the last sample is held.
    inline std::vector<RobotState> rollout(const RobotParams& params, const RobotState& start,
                                           std::span<const Control> samples, double dt)
    {
        if (samples.empty())
            return {start};
        auto at = [&](double t) {
            const double u = t / dt;
            const auto k = static_cast<std::size_t>(std::floor(u));
            if (k + 1 >= samples.size())
                return samples.back();
            const double w = u - static_cast<double>(k);
            return Control{(1.0 - w) * samples[k].v0 + w * samples[k + 1].v0,
                           (1.0 - w) * samples[k].steer + w * samples[k + 1].steer};
        };
        return rollout(params, start, at, dt, static_cast<int>(samples.size()) - 1);
    }
}
