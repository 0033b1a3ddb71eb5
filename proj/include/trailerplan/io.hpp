#pragma once

#include "trailerplan/alm.hpp"
#include "trailerplan/feasibility.hpp"
#include "trailerplan/path.hpp"
#include "trailerplan/poly.hpp"
#include "trailerplan/problem.hpp"
#include "trailerplan/scenario.hpp"
#include "trailerplan/search.hpp"

#include <json.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

namespace trailerplan
{
    using Json = nlohmann::ordered_json;

    inline Json readJsonFile(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw PlanningError(ErrorCode::ParseError, "cannot open " + path);
        try
        {
            return Json::parse(in, nullptr, true, true);
        }
        catch (const Json::exception& e)
        {
            throw PlanningError(ErrorCode::ParseError, path + ": " + e.what());
        }
    }

    inline void writeTextFile(const std::string& path, const std::string& text)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw PlanningError(ErrorCode::ParseError, "cannot write " + path);
        out << text;
    }

    namespace detail
    {
        inline Json vec2(const Vec2& v) { return Json::array({v.x(), v.y()}); }

        inline Vec2 vec2(const Json& j)
        {
            if (!j.is_array() || j.size() != 2)
                throw PlanningError(ErrorCode::ParseError, "expected [x, y], got " + j.dump());
            return {j[0].get<double>(), j[1].get<double>()};
        }

        inline Json polygon(const Polygon& p)
        {
            Json out = Json::array();
            for (const Vec2& v : p)
                out.push_back(vec2(v));
            return out;
        }

        inline Polygon polygon(const Json& j)
        {
            Polygon p;
            for (const Json& v : j)
                p.push_back(vec2(v));
            return p;
        }

        template <typename T>
        void readIf(const Json& j, const char* key, T& out)
        {
            if (j.contains(key))
                out = j.at(key).get<T>();
        }

        inline std::string fmt(double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }
    }

    // robot

    inline Json toJson(const RobotParams& p)
    {
        Json sizes = Json::array();
        for (const auto& b : p.body_sizes)
            sizes.push_back({b.length, b.width});
        return {
            {"n_trailers", p.n_trailers},
            {"wheelbase", p.wheelbase},
            {"hitch_lengths", p.hitch_lengths},
            {"rear_offset", p.rear_offset},
            {"tractor_length", p.tractor_length},
            {"body_sizes", sizes},
            {"wrap_radii", p.wrap_radii},
            {"limits",
             {{"v_max", p.limits.v_max},
              {"a_max", p.limits.a_max},
              {"a_lat_max", p.limits.a_lat_max},
              {"kappa_max", p.limits.kappa_max},
              {"dtheta_max", p.limits.dtheta_max},
              {"steer_max", p.limits.steer_max}}},
            {"veh_clearance", p.veh_clearance},
            {"slack_floor", p.slack_floor},
        };
    }

    /// Keys missing from `j` keep the benchmark robot's values for the given
    /// trailer count.
    inline RobotParams robotFromJson(const Json& j, int default_trailers = 1)
    {
        const int n = j.value("n_trailers", default_trailers);
        RobotParams p = benchmarkRobot(n);
        try
        {
            detail::readIf(j, "wheelbase", p.wheelbase);
            detail::readIf(j, "hitch_lengths", p.hitch_lengths);
            detail::readIf(j, "rear_offset", p.rear_offset);
            detail::readIf(j, "tractor_length", p.tractor_length);
            if (j.contains("body_sizes"))
            {
                p.body_sizes.clear();
                for (const Json& b : j.at("body_sizes"))
                    p.body_sizes.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
                if (!j.contains("wrap_radii"))
                {
                    p.wrap_radii.clear();
                    for (const auto& b : p.body_sizes)
                        p.wrap_radii.push_back(0.5 * std::hypot(b.length, b.width));
                }
            }
            detail::readIf(j, "wrap_radii", p.wrap_radii);
            if (j.contains("limits"))
            {
                const Json& l = j.at("limits");
                detail::readIf(l, "v_max", p.limits.v_max);
                detail::readIf(l, "a_max", p.limits.a_max);
                detail::readIf(l, "a_lat_max", p.limits.a_lat_max);
                detail::readIf(l, "kappa_max", p.limits.kappa_max);
                detail::readIf(l, "dtheta_max", p.limits.dtheta_max);
                detail::readIf(l, "steer_max", p.limits.steer_max);
            }
            detail::readIf(j, "veh_clearance", p.veh_clearance);
            detail::readIf(j, "slack_floor", p.slack_floor);
        }
        catch (const Json::exception& e)
        {
            throw PlanningError(ErrorCode::ParseError, std::string("robot: ") + e.what());
        }
        p.validate();
        return p;
    }

    // scenario

    inline Json toJson(const Scenario& sc)
    {
        Json obs = Json::array();
        for (const Polygon& p : sc.obstacles.polygons)
            obs.push_back(detail::polygon(p));
        return {
            {"seed", sc.seed},
            {"bounds", {{"min", detail::vec2(sc.obstacles.bounds_min)}, {"max", detail::vec2(sc.obstacles.bounds_max)}}},
            {"resolution", sc.resolution},
            {"start",
             {{"x", sc.start.p0.x()},
              {"y", sc.start.p0.y()},
              {"theta0", sc.start.theta0},
              {"v0", sc.start.v0},
              {"thetas", sc.start.thetas}}},
            {"target", detail::polygon(sc.target)},
            {"obstacles", obs},
        };
    }

    inline Scenario scenarioFromJson(const Json& j)
    {
        Scenario sc;
        try
        {
            sc.seed = j.value("seed", std::uint64_t{0});
            const Json& b = j.at("bounds");
            sc.obstacles.bounds_min = detail::vec2(b.at("min"));
            sc.obstacles.bounds_max = detail::vec2(b.at("max"));
            sc.resolution = j.value("resolution", 0.1);
            const Json& s = j.at("start");
            sc.start.p0 = Vec2(s.at("x").get<double>(), s.at("y").get<double>());
            sc.start.theta0 = s.value("theta0", 0.0);
            sc.start.v0 = s.value("v0", 0.0);
            sc.start.thetas = s.value("thetas", std::vector<double>{});
            sc.target = detail::polygon(j.at("target"));
            if (j.contains("obstacles"))
                for (const Json& p : j.at("obstacles"))
                    sc.obstacles.polygons.push_back(detail::polygon(p));
        }
        catch (const Json::exception& e)
        {
            throw PlanningError(ErrorCode::ParseError, std::string("scenario: ") + e.what());
        }
        return sc;
    }

    /// Generation block: {"seed", "world", "counts": [tri, quad, pent], "band": [lo, hi], ...}.
    inline ScenarioSpec scenarioSpecFromJson(const Json& j)
    {
        ScenarioSpec spec;
        try
        {
            detail::readIf(j, "seed", spec.seed);
            if (j.contains("world"))
                spec.world = detail::vec2(j.at("world"));
            if (j.contains("counts"))
            {
                const auto c = j.at("counts").get<std::array<int, 3>>();
                spec.n_tri = c[0];
                spec.n_quad = c[1];
                spec.n_pent = c[2];
            }
            if (j.contains("band"))
                std::tie(spec.band_min, spec.band_max) = j.at("band").get<std::pair<double, double>>();
            detail::readIf(j, "placement_trailers", spec.placement_trailers);
            detail::readIf(j, "min_radius", spec.min_radius);
            detail::readIf(j, "max_radius", spec.max_radius);
            detail::readIf(j, "target_length", spec.target_length);
            detail::readIf(j, "target_width", spec.target_width);
            detail::readIf(j, "margin", spec.margin);
            detail::readIf(j, "resolution", spec.resolution);
            detail::readIf(j, "retries", spec.retries);
        }
        catch (const Json::exception& e)
        {
            throw PlanningError(ErrorCode::ParseError, std::string("generate: ") + e.what());
        }
        if (spec.n_tri < 0 || spec.n_quad < 0 || spec.n_pent < 0)
            throw PlanningError(ErrorCode::InvalidConfig, "obstacle counts must be >= 0");
        if (!(spec.band_min > 0.0 && spec.band_max >= spec.band_min))
            throw PlanningError(ErrorCode::InvalidConfig, "band needs 0 < min <= max");
        return spec;
    }

    /// A scenario file either spells the world out or holds a "generate" block.
    inline Scenario loadScenario(const Json& j, const RobotParams& params)
    {
        if (j.contains("generate"))
            return genScenario(scenarioSpecFromJson(j.at("generate")), params);
        return scenarioFromJson(j);
    }

    // configs

    inline void applySearchConfig(const Json& j, SearchConfig& c)
    {
        detail::readIf(j, "xy_resolution", c.xy_resolution);
        detail::readIf(j, "yaw_bins", c.yaw_bins);
        detail::readIf(j, "speed_ratio", c.speed_ratio);
        detail::readIf(j, "steer_levels", c.steer_levels);
        detail::readIf(j, "d_shoot", c.d_shoot);
        detail::readIf(j, "w_length", c.w_length);
        detail::readIf(j, "w_dtheta", c.w_dtheta);
        detail::readIf(j, "w_control", c.w_control);
        detail::readIf(j, "w_l", c.w_l);
        detail::readIf(j, "w_e", c.w_e);
        detail::readIf(j, "w_jackknife", c.w_jackknife);
        detail::readIf(j, "clearance_margin", c.clearance_margin);
        detail::readIf(j, "time_budget", c.time_budget);
        detail::readIf(j, "settle_expansions", c.settle_expansions);
        detail::readIf(j, "trailer_substeps", c.trailer_substeps);
        c.validate();
    }

    inline void applySolverConfig(const Json& j, SolverConfig& c)
    {
        detail::readIf(j, "pieces", c.pieces);
        detail::readIf(j, "piece_length", c.piece_length);
        detail::readIf(j, "min_pieces", c.min_pieces);
        detail::readIf(j, "max_pieces", c.max_pieces);
        detail::readIf(j, "stamps", c.stamps);
        detail::readIf(j, "theta_ratio", c.theta_ratio);
        detail::readIf(j, "guess_speed_ratio", c.guess_speed_ratio);
        detail::readIf(j, "sdf_margin", c.sdf_margin);
        detail::readIf(j, "tangent_margin", c.tangent_margin);
        if (j.contains("weights"))
        {
            const Json& w = j.at("weights");
            detail::readIf(w, "x", c.weights.x);
            detail::readIf(w, "y", c.weights.y);
            detail::readIf(w, "s", c.weights.s);
            detail::readIf(w, "theta", c.weights.theta);
            detail::readIf(w, "time", c.weights.time);
        }
        if (j.contains("alm"))
        {
            const Json& a = j.at("alm");
            detail::readIf(a, "rho_init", c.alm.rho_init);
            detail::readIf(a, "rho_growth", c.alm.rho_growth);
            detail::readIf(a, "rho_max", c.alm.rho_max);
            detail::readIf(a, "shrink", c.alm.shrink);
            detail::readIf(a, "violation_tol", c.alm.violation_tol);
            detail::readIf(a, "max_outer", c.alm.max_outer);
            detail::readIf(a, "smooth_eps", c.alm.smooth_eps);
            detail::readIf(a, "inner_max_iterations", c.alm.inner.max_iterations);
            detail::readIf(a, "inner_g_epsilon", c.alm.inner.g_epsilon);
            detail::readIf(a, "inner_delta", c.alm.inner.delta);
        }
    }

    // trajectory dump

    namespace detail
    {
        inline Json splineJson(const QuinticSpline& s)
        {
            Json rows = Json::array();
            for (int r = 0; r < s.coeffs().rows(); r++)
            {
                Json row = Json::array();
                for (int c = 0; c < s.coeffs().cols(); c++)
                    row.push_back(s.coeffs()(r, c));
                rows.push_back(row);
            }
            return {{"dim", s.dim()},
                    {"lengths", std::vector<double>(s.lengths().data(), s.lengths().data() + s.lengths().size())},
                    {"coeffs", rows}};
        }

        inline QuinticSpline splineFromJson(const Json& j)
        {
            const auto len = j.at("lengths").get<std::vector<double>>();
            const int dim = j.at("dim").get<int>();
            const Json& rows = j.at("coeffs");
            if (rows.size() != 6 * len.size())
                throw PlanningError(ErrorCode::ParseError, "spline needs 6 coefficient rows per piece");
            Eigen::MatrixXd c(rows.size(), dim);
            for (std::size_t r = 0; r < rows.size(); r++)
            {
                if (static_cast<int>(rows[r].size()) != dim)
                    throw PlanningError(ErrorCode::ParseError, "coefficient row has the wrong width");
                for (int k = 0; k < dim; k++)
                    c(r, k) = rows[r][k].get<double>();
            }
            return QuinticSpline(Eigen::Map<const Eigen::VectorXd>(len.data(), len.size()), c);
        }
    }

    inline std::vector<std::string> trajectoryColumns(int n_trailers)
    {
        std::vector<std::string> cols{"t", "x", "y", "theta0"};
        for (int i = 1; i <= n_trailers; i++)
            cols.push_back("theta" + std::to_string(i));
        cols.insert(cols.end(), {"v0", "a", "kappa"});
        return cols;
    }

    /// Dense (t, x, y, theta0..thetaN, v0, a, kappa) rows every dt, last row at T.
    inline std::vector<std::vector<double>> sampleTrajectory(const FlatTrajectory& traj, const RobotParams& params,
                                                             double dt)
    {
        std::vector<std::vector<double>> rows;
        const double T = traj.duration();
        const int steps = std::max(1, static_cast<int>(std::ceil(T / dt - 1e-9)));
        for (int k = 0; k <= steps; k++)
        {
            const double t = std::min(T, k * dt);
            const FlatDerivatives fd = flatDerivatives(traj, t);
            const double n2 = fd.d1.squaredNorm(), nn = std::sqrt(n2);
            std::vector<double> row{t, fd.pos.x(), fd.pos.y(), std::atan2(fd.d1.y(), fd.d1.x())};
            for (int i = 0; i < params.n_trailers; i++)
                row.push_back(fd.theta(i));
            row.push_back(fd.s_dot * nn);
            row.push_back(fd.s_ddot * nn + fd.s_dot * fd.s_dot * fd.d1.dot(fd.d2) / nn);
            row.push_back((fd.d1.x() * fd.d2.y() - fd.d1.y() * fd.d2.x()) / (n2 * nn));
            rows.push_back(std::move(row));
        }
        return rows;
    }

    inline Json trajectoryToJson(const FlatTrajectory& traj, const DecisionVector& d, const RobotParams& params,
                                 const Scenario& scenario, int stamps, double dt)
    {
        Json j;
        j["robot"] = toJson(params);
        j["scenario"] = toJson(scenario);
        j["stamps"] = stamps;
        j["S"] = std::vector<double>(d.S.data(), d.S.data() + d.S.size());
        j["T_f"] = d.duration;
        j["splines"] = {{"xy", detail::splineJson(traj.xy)},
                        {"arc", detail::splineJson(traj.arc)},
                        {"thetas", detail::splineJson(traj.thetas)}};
        j["dt"] = dt;
        j["columns"] = trajectoryColumns(params.n_trailers);
        j["samples"] = sampleTrajectory(traj, params, dt);
        return j;
    }

    struct LoadedTrajectory
    {
        FlatTrajectory trajectory;
        RobotParams params;
        Scenario scenario;
        int stamps = 12;
    };

    inline LoadedTrajectory trajectoryFromJson(const Json& j)
    {
        LoadedTrajectory out;
        try
        {
            out.params = robotFromJson(j.at("robot"));
            out.scenario = scenarioFromJson(j.at("scenario"));
            out.stamps = j.value("stamps", 12);
            const Json& s = j.at("splines");
            out.trajectory.xy = detail::splineFromJson(s.at("xy"));
            out.trajectory.arc = detail::splineFromJson(s.at("arc"));
            out.trajectory.thetas = detail::splineFromJson(s.at("thetas"));
        }
        catch (const Json::exception& e)
        {
            throw PlanningError(ErrorCode::ParseError, std::string("trajectory: ") + e.what());
        }
        if (out.trajectory.xy.dim() != 2 || out.trajectory.arc.dim() != 1 ||
            out.trajectory.thetas.dim() != out.params.n_trailers)
            throw PlanningError(ErrorCode::ParseError, "trajectory spline dimensions do not match the robot");
        return out;
    }

    // path dump

    inline std::string pathToText(const SearchPath& path, int n_trailers)
    {
        std::ostringstream os;
        os << "# t x y theta0";
        for (int i = 1; i <= n_trailers; i++)
            os << " theta" << i;
        os << " v0 steer\n";
        for (const PathSample& s : path.samples)
        {
            os << detail::fmt(s.t) << ' ' << detail::fmt(s.p.x()) << ' ' << detail::fmt(s.p.y()) << ' '
               << detail::fmt(s.theta0);
            for (double th : s.thetas)
                os << ' ' << detail::fmt(th);
            os << ' ' << detail::fmt(s.v0) << ' ' << detail::fmt(s.steer) << '\n';
        }
        return os.str();
    }

    // SDF raster

    /// Header line "SDF width height resolution origin_x origin_y", then one
    /// line per grid row from iy = 0 upward, values in %.17g.
    inline std::string sdfToText(const Sdf& sdf)
    {
        const GridGeometry& g = sdf.geometry();
        std::string out = "SDF " + std::to_string(g.width) + ' ' + std::to_string(g.height) + ' ' +
                          detail::fmt(g.resolution) + ' ' + detail::fmt(g.origin.x()) + ' ' +
                          detail::fmt(g.origin.y()) + '\n';
        for (int iy = 0; iy < g.height; iy++)
        {
            for (int ix = 0; ix < g.width; ix++)
            {
                if (ix)
                    out += ' ';
                out += detail::fmt(sdf.at(ix, iy));
            }
            out += '\n';
        }
        return out;
    }

    inline Sdf sdfFromText(const std::string& text)
    {
        std::istringstream is(text);
        std::string tag;
        GridGeometry g;
        double ox = 0.0, oy = 0.0;
        if (!(is >> tag >> g.width >> g.height >> g.resolution >> ox >> oy) || tag != "SDF")
            throw PlanningError(ErrorCode::ParseError, "bad SDF header");
        g.origin = Vec2(ox, oy);
        std::vector<double> v(g.cells());
        for (double& x : v)
            if (!(is >> x))
                throw PlanningError(ErrorCode::ParseError, "SDF raster is truncated");
        return Sdf(g, std::move(v));
    }

    // reports

    inline Json toJson(const FeasibilityReport& r)
    {
        return {
            {"ok", r.ok()},
            {"samples", r.samples},
            {"equality_residual", r.equality},
            {"v_excess", r.v_excess},
            {"a_excess", r.a_excess},
            {"a_lat_excess", r.alat_excess},
            {"kappa_excess", r.kappa_excess},
            {"hinge_excess", r.hinge_excess},
            {"min_clearance", r.min_clearance},
            {"min_s_dot", r.min_s_dot},
            {"min_tangent_sq", r.min_tangent_sq},
            {"end_region", r.end_region},
            {"rollout_yaw_error", r.rollout_yaw_error},
            {"mean_abs_kappa", r.mean_abs_kappa},
            {"max_abs_kappa", r.max_abs_kappa},
            {"length", r.length},
            {"failures", r.failures},
        };
    }

    inline Json toJson(const AlmResult& a)
    {
        Json hist = Json::array();
        for (const AlmIteration& it : a.history)
            hist.push_back({{"outer", it.outer},
                            {"cost", it.cost},
                            {"eq_violation", it.eq_violation},
                            {"ineq_violation", it.ineq_violation},
                            {"rho", it.rho},
                            {"inner_iterations", it.inner_iterations},
                            {"inner_status", toString(it.inner_status)},
                            {"wall_ms", it.wall_ms}});
        return {{"status", toString(a.status)},
                {"cost", a.cost},
                {"violation", a.violation},
                {"rho", a.rho},
                {"iterations", hist}};
    }
}
