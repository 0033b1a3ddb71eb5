#pragma once

#include "trailerplan/dubins.hpp"
#include "trailerplan/env.hpp"
#include "trailerplan/model.hpp"
#include "trailerplan/path.hpp"

#include <chrono>
#include <optional>
#include <queue>
#include <vector>

namespace trailerplan
{
    struct SearchConfig
    {
        double xy_resolution = 0.25;
        int yaw_bins = 72;
        double speed_ratio = 0.6;               // primitive v0 = ratio * v_max
        std::vector<double> steer_levels{0.0, 0.5, -0.5, 1.0, -1.0};  // times steer_max
        double d_shoot = 8.0;
        double w_length = 1.0;
        double w_dtheta = 0.2;
        double w_control = 0.05;
        double w_l = 1.0;
        double w_e = 5.0;
        double w_jackknife = 10.0;
        double clearance_margin = 0.1;          // added to r0 in the tractor check
        double time_budget = 5.0;               // seconds
        int settle_expansions = 2000;           // extra expansions after the first candidate; < 0 disables
        int trailer_substeps = 10;

        void validate() const
        {
            auto fail = [](const std::string& what) { throw PlanningError(ErrorCode::InvalidConfig, what); };
            if (!(xy_resolution > 0.0) || yaw_bins <= 0)
                fail("search resolutions must be positive");
            if (!(speed_ratio > 0.0) || steer_levels.empty())
                fail("primitive set is empty");
            if (!(d_shoot > 0.0))
                fail("d_shoot must be positive");
            for (double w : {w_length, w_dtheta, w_control, w_l, w_e, w_jackknife, clearance_margin})
                if (!(w >= 0.0))
                    fail("search weights must be >= 0");
            if (!(time_budget > 0.0) || trailer_substeps <= 0)
                fail("time budget and substeps must be positive");
        }
    };

    struct SearchNode
    {
        int ix = 0;
        int iy = 0;
        int iyaw = 0;
        Pose2 pose;
        double g = 0.0;
        double f = 0.0;
        int parent = -1;
        Control control;
        double duration = 0.0;
    };

    enum class ExpandResult
    {
        Ok,
        OutOfMap,
        Collision,
    };

    /// One terminal per edge: tractor front flush with the edge midpoint,
    /// heading along the outward normal.
    inline std::vector<Pose2> getEnds(const TargetRegion& region, const RobotParams& params)
    {
        std::vector<Pose2> ends;
        const double back = params.rear_offset + 0.5 * params.tractor_length;
        for (std::size_t k = 0; k < region.edges(); k++)
        {
            const Vec2 mid = 0.5 * (region.vertices[k] + region.vertices[(k + 1) % region.edges()]);
            const Vec2& n = region.normals[k];
            const Vec2 p = mid - back * n;
            ends.push_back({p.x(), p.y(), std::atan2(n.y(), n.x())});
        }
        return ends;
    }

    /// Tractor-only clearance test used by expansion and shooting.
    inline bool tractorClear(const Sdf& sdf, const RobotParams& params, const Pose2& pose, double margin)
    {
        if (!sdf.geometry().inMap(pose.position()))
            return false;
        const Vec2 c = pose.position() + params.rear_offset * heading(pose.yaw);
        return sdf.query(c).value > params.wrap_radii[0] + margin;
    }

    /// Applies constant (v0, steer) for `duration` in closed form, checking the
    /// tractor every map cell of arc. On success `out` holds the end pose and
    /// `cost` the g increment.
    inline ExpandResult expand(const Pose2& from, const Control& u, double duration, const Sdf& sdf,
                               const RobotParams& params, const SearchConfig& cfg, Pose2& out, double& cost)
    {
        const double kappa = std::tan(u.steer) / params.wheelbase;
        const double arc = u.v0 * duration;
        const int sub = std::max(1, static_cast<int>(std::ceil(arc / sdf.geometry().resolution)));
        for (int k = 1; k <= sub; k++)
        {
            const Pose2 p = DubinsPath::advance(from, kappa, arc * k / sub);
            if (!sdf.geometry().inMap(p.position()))
                return ExpandResult::OutOfMap;
            if (!tractorClear(sdf, params, p, cfg.clearance_margin))
                return ExpandResult::Collision;
            out = p;
        }
        cost = cfg.w_length * arc + cfg.w_dtheta * std::abs(kappa * arc) +
               cfg.w_control * duration * (u.v0 * u.v0 + u.steer * u.steer);
        return ExpandResult::Ok;
    }

    /// Sub-stepped explicit Euler of the trailer chain along a sampled tractor
    /// path, with v0 and the yaw change estimated between neighbouring samples.
    /// Overwrites samples[k].thetas for every k.
    inline void propagateTrailers(const RobotParams& params, std::vector<PathSample>& samples,
                                  const std::vector<double>& initial, int substeps)
    {
        if (samples.empty())
            return;
        const int n = params.n_trailers;
        std::vector<double> th(initial.begin(), initial.end());
        th.resize(n, samples.front().theta0);
        samples.front().thetas = th;
        for (std::size_t k = 1; k < samples.size(); k++)
        {
            const PathSample& a = samples[k - 1];
            const PathSample& b = samples[k];
            const double dt = b.t - a.t;
            const double dist = (b.p - a.p).norm();
            const double v = dt > 0.0 ? dist / dt : 0.0;
            const double dyaw = wrapAngle(b.theta0 - a.theta0);
            const double h = dt / substeps;
            for (int s = 0; s < substeps; s++)
            {
                const double yaw0 = a.theta0 + dyaw * (s + 0.0) / substeps;
                double prev_yaw = yaw0;
                double v_prev = v;
                for (int i = 0; i < n; i++)
                {
                    const double d = prev_yaw - th[i];
                    const double rate = v_prev * std::sin(d) / params.hitch_lengths[i];
                    v_prev *= std::cos(d);
                    prev_yaw = th[i];
                    th[i] += h * rate;
                }
            }
            samples[k].thetas = th;
        }
    }

    /// w_l * length + w_e * sum of vehicle-centre distances to the region at the
    /// end, plus w_jackknife times the worst hinge-angle excess along the path.
    inline double scorePath(const SearchPath& path, const TargetRegion& region, const RobotParams& params,
                            const SearchConfig& cfg)
    {
        double score = cfg.w_l * path.length;
        if (path.samples.empty())
            return score;
        const PathSample& last = path.samples.back();
        std::vector<double> yaws{last.theta0};
        yaws.insert(yaws.end(), last.thetas.begin(), last.thetas.end());
        const PoseChain chain = poseChain(params, last.p, yaws);
        for (const Vec2& c : chain.centers)
            score += cfg.w_e * region.distance(c);
        double excess = 0.0;
        for (const PathSample& s : path.samples)
        {
            double prev = s.theta0;
            for (double t : s.thetas)
            {
                excess = std::max(excess, std::abs(wrapAngle(prev - t)) - params.limits.dtheta_max);
                prev = t;
            }
        }
        score += cfg.w_jackknife * excess;
        return score;
    }

    struct SearchResult
    {
        SearchPath path;
        std::vector<SearchPath> candidates;  // one per terminal that was reached
        int expansions = 0;
        double elapsed_ms = 0.0;
    };

    namespace detail
    {
        struct OpenEntry
        {
            double f;
            double g;
            long seq;
            int node;
        };

        struct OpenOrder
        {
            bool operator()(const OpenEntry& a, const OpenEntry& b) const
            {
                if (a.f != b.f)
                    return a.f > b.f;
                if (a.g != b.g)
                    return a.g > b.g;
                return a.seq > b.seq;
            }
        };
    }

    /// Multi-terminal forward search over tractor SE(2) states. Throws NoPath
    /// when no terminal was reached before the open set emptied or the budget
    /// ran out.
    inline SearchResult search(const Sdf& sdf, const RobotState& start, const TargetRegion& region,
                               const RobotParams& params, const SearchConfig& cfg)
    {
        using Clock = std::chrono::steady_clock;
        const auto t_begin = Clock::now();
        cfg.validate();
        params.validate();

        const GridGeometry& geo = sdf.geometry();
        const Vec2 ext = geo.extent();
        const int nx = std::max(1, static_cast<int>(std::ceil(ext.x() / cfg.xy_resolution)));
        const int ny = std::max(1, static_cast<int>(std::ceil(ext.y() / cfg.xy_resolution)));
        const double yaw_step = 2.0 * kPi / cfg.yaw_bins;
        auto keyOf = [&](const Pose2& p, int& ix, int& iy, int& iyaw) {
            ix = std::clamp(static_cast<int>(std::floor((p.x - geo.origin.x()) / cfg.xy_resolution)), 0, nx - 1);
            iy = std::clamp(static_cast<int>(std::floor((p.y - geo.origin.y()) / cfg.xy_resolution)), 0, ny - 1);
            iyaw = static_cast<int>(std::floor((wrapAngle(p.yaw) + kPi) / yaw_step)) % cfg.yaw_bins;
            return (static_cast<std::size_t>(iy) * nx + ix) * cfg.yaw_bins + iyaw;
        };

        const Pose2 start_pose{start.p0.x(), start.p0.y(), start.theta0};
        if (!geo.inMap(start.p0) || !tractorClear(sdf, params, start_pose, 0.0))
            throw PlanningError(ErrorCode::NoPath, "start pose is off the map or in collision");

        const std::vector<Pose2> ends = getEnds(region, params);
        std::vector<bool> has_path(ends.size(), false);
        for (std::size_t e = 0; e < ends.size(); e++)
            if (!tractorClear(sdf, params, ends[e], 0.0))
                has_path[e] = true;  // unreachable terminal, never attempted

        const double v = cfg.speed_ratio * params.limits.v_max;
        const double duration = 2.0 * cfg.xy_resolution / v;
        const double radius = 1.0 / params.limits.kappa_max;
        const double step = geo.resolution;

        std::vector<SearchNode> nodes;
        std::vector<int> best(static_cast<std::size_t>(nx) * ny * cfg.yaw_bins, -1);
        std::vector<std::uint8_t> closed(best.size(), 0);
        std::priority_queue<detail::OpenEntry, std::vector<detail::OpenEntry>, detail::OpenOrder> open;
        long seq = 0;

        auto heuristic = [&](const Pose2& p) { return cfg.w_length * (p.position() - region.center).norm(); };

        {
            SearchNode root;
            root.pose = start_pose;
            const std::size_t key = keyOf(root.pose, root.ix, root.iy, root.iyaw);
            root.f = heuristic(root.pose);
            nodes.push_back(root);
            best[key] = 0;
            open.push({root.f, 0.0, seq++, 0});
        }

        auto samplesTo = [&](int idx) {
            std::vector<int> chain;
            for (int i = idx; i >= 0; i = nodes[i].parent)
                chain.push_back(i);
            std::reverse(chain.begin(), chain.end());
            std::vector<PathSample> out;
            PathSample s0;
            s0.p = start.p0;
            s0.theta0 = start.theta0;
            out.push_back(s0);
            double t = 0.0;
            for (std::size_t c = 1; c < chain.size(); c++)
            {
                const SearchNode& from = nodes[chain[c - 1]];
                const SearchNode& to = nodes[chain[c]];
                const double kappa = std::tan(to.control.steer) / params.wheelbase;
                const double arc = to.control.v0 * to.duration;
                const int sub = std::max(1, static_cast<int>(std::ceil(arc / step)));
                for (int k = 1; k <= sub; k++)
                {
                    const Pose2 p = DubinsPath::advance(from.pose, kappa, arc * k / sub);
                    PathSample s;
                    s.t = t + to.duration * k / sub;
                    s.p = p.position();
                    s.theta0 = p.yaw;
                    s.v0 = to.control.v0;
                    s.steer = to.control.steer;
                    out.push_back(s);
                }
                t += to.duration;
            }
            return out;
        };

        auto finish = [&](std::vector<PathSample> samples, int terminal) {
            propagateTrailers(params, samples, start.thetas, cfg.trailer_substeps);
            SearchPath path;
            path.samples = std::move(samples);
            const auto s = path.arcLengths();
            path.length = s.back();
            path.terminal = terminal;
            path.score = scorePath(path, region, params, cfg);
            return path;
        };

        SearchResult result;
        std::optional<int> settle_left;
        int expansions = 0;
        auto remaining = [&] {
            for (bool h : has_path)
                if (!h)
                    return true;
            return false;
        };

        while (!open.empty() && remaining())
        {
            if ((expansions & 63) == 0 &&
                std::chrono::duration<double>(Clock::now() - t_begin).count() > cfg.time_budget)
                break;
            if (settle_left && (*settle_left)-- <= 0)
                break;

            const detail::OpenEntry top = open.top();
            open.pop();
            const SearchNode cur = nodes[top.node];
            const std::size_t key = (static_cast<std::size_t>(cur.iy) * nx + cur.ix) * cfg.yaw_bins + cur.iyaw;
            if (closed[key] || best[key] != top.node)
                continue;
            closed[key] = 1;
            expansions++;

            for (std::size_t e = 0; e < ends.size(); e++)
            {
                if (has_path[e])
                    continue;
                const Pose2& end = ends[e];
                const double dist = (cur.pose.position() - end.position()).norm();
                std::vector<PathSample> samples;
                bool found = false;
                if (dist < cfg.xy_resolution && std::abs(wrapAngle(cur.pose.yaw - end.yaw)) < 0.5 * yaw_step)
                {
                    samples = samplesTo(top.node);
                    found = true;
                }
                else if (dist < cfg.d_shoot)
                {
                    const DubinsPath db = dubinsConnect(cur.pose, end, radius);
                    const int n = std::max(1, static_cast<int>(std::ceil(db.length() / step)));
                    bool free = true;
                    for (int k = 1; k <= n && free; k++)
                        free = tractorClear(sdf, params, db.sample(db.length() * k / n), cfg.clearance_margin);
                    if (free)
                    {
                        samples = samplesTo(top.node);
                        double t = samples.back().t;
                        for (int k = 1; k <= n; k++)
                        {
                            double kappa = 0.0;
                            const Pose2 p = db.sample(db.length() * k / n, &kappa);
                            PathSample s;
                            s.t = t + db.length() / n / v;
                            t = s.t;
                            s.p = p.position();
                            s.theta0 = p.yaw;
                            s.v0 = v;
                            s.steer = std::atan(kappa * params.wheelbase);
                            samples.push_back(s);
                        }
                        found = true;
                    }
                }
                if (!found)
                    continue;
                has_path[e] = true;
                SearchPath path = finish(std::move(samples), static_cast<int>(e));
                result.candidates.push_back(path);
                if (result.candidates.size() == 1 || path.score < result.path.score)
                    result.path = path;
                if (!settle_left && cfg.settle_expansions >= 0)
                    settle_left = cfg.settle_expansions;
            }

            for (double level : cfg.steer_levels)
            {
                const Control u{v, level * params.limits.steer_max};
                Pose2 next;
                double dg = 0.0;
                if (expand(cur.pose, u, duration, sdf, params, cfg, next, dg) != ExpandResult::Ok)
                    continue;
                SearchNode child;
                const std::size_t ck = keyOf(next, child.ix, child.iy, child.iyaw);
                if (closed[ck])
                    continue;
                child.pose = next;
                child.g = cur.g + dg;
                if (best[ck] >= 0 && nodes[best[ck]].g <= child.g)
                    continue;
                child.f = child.g + heuristic(next);
                child.parent = top.node;
                child.control = u;
                child.duration = duration;
                best[ck] = static_cast<int>(nodes.size());
                nodes.push_back(child);
                open.push({child.f, child.g, seq++, best[ck]});
            }
        }

        result.expansions = expansions;
        result.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - t_begin).count();
        if (result.candidates.empty())
            throw PlanningError(ErrorCode::NoPath, "no terminal reached after " + std::to_string(expansions) +
                                                       " expansions");
        return result;
    }
}
