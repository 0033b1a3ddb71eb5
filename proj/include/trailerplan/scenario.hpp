#pragma once

#include "trailerplan/env.hpp"
#include "trailerplan/model.hpp"

#include <cstdint>
#include <random>

namespace trailerplan
{
    /// A planning task: world, obstacles, start state and target polygon.
    struct Scenario
    {
        std::uint64_t seed = 0;
        ObstacleSet obstacles;
        double resolution = 0.1;
        RobotState start;
        std::vector<Vec2> target;
    };

    struct ScenarioSpec
    {
        std::uint64_t seed = 0;
        Vec2 world = Vec2(40.0, 40.0);
        int n_tri = 20;
        int n_quad = 20;
        int n_pent = 20;
        double band_min = 10.0;
        double band_max = 20.0;
        int placement_trailers = 3;   // start clearance is checked for at least this chain
        double min_radius = 0.5;
        double max_radius = 2.0;
        double target_length = 3.5;
        double target_width = 2.0;
        double margin = 0.1;          // beyond the tractor wrap radius
        double resolution = 0.1;
        int retries = 2000;
    };

    /// Andrew's monotone chain, counter-clockwise, collinear points dropped.
    inline Polygon convexHull(Polygon pts)
    {
        std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
            return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
        });
        if (pts.size() < 3)
            return pts;
        Polygon hull(2 * pts.size());
        std::size_t k = 0;
        for (std::size_t i = 0; i < pts.size(); i++)
        {
            while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0)
                k--;
            hull[k++] = pts[i];
        }
        for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; i--)
        {
            while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i - 1] - hull[k - 2]) <= 0.0)
                k--;
            hull[k++] = pts[i - 1];
        }
        hull.resize(k - 1);
        return hull;
    }

    inline double segmentDistance(const Vec2& p, const Vec2& a, const Vec2& b)
    {
        const Vec2 ab = b - a;
        const double l2 = ab.squaredNorm();
        const double t = l2 > 0.0 ? std::clamp((p - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
        return (a + t * ab - p).norm();
    }

    /// Distance from a point to a polygon, zero inside.
    inline double polygonDistance(const Polygon& poly, const Vec2& p)
    {
        if (pointInPolygon(poly, p))
            return 0.0;
        double best = kInf;
        for (std::size_t k = 0; k < poly.size(); k++)
            best = std::min(best, segmentDistance(p, poly[k], poly[(k + 1) % poly.size()]));
        return best;
    }

    inline bool segmentsCross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
    {
        const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
        const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
        return ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0));
    }

    /// Distance between two polygons, zero when they overlap.
    inline double polygonGap(const Polygon& a, const Polygon& b)
    {
        for (std::size_t i = 0; i < a.size(); i++)
            for (std::size_t j = 0; j < b.size(); j++)
                if (segmentsCross(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()]))
                    return 0.0;
        double best = kInf;
        for (const Vec2& p : a)
            best = std::min(best, polygonDistance(b, p));
        for (const Vec2& p : b)
            best = std::min(best, polygonDistance(a, p));
        return best;
    }

    /// Rectangle centred at c with its long side along yaw.
    inline Polygon rectangle(const Vec2& c, double yaw, double length, double width)
    {
        const Vec2 u = heading(yaw), v(-u.y(), u.x());
        const double hl = 0.5 * length, hw = 0.5 * width;
        return {c - hl * u - hw * v, c + hl * u - hw * v, c + hl * u + hw * v, c - hl * u + hw * v};
    }

    /// Body rectangles of a straight chain at the given tractor pose.
    inline std::vector<Polygon> straightChainBodies(const RobotParams& params, const Vec2& p0, double yaw)
    {
        const std::vector<double> yaws(params.vehicles(), yaw);
        const PoseChain chain = poseChain(params, p0, yaws);
        std::vector<Polygon> out;
        for (int i = 0; i < params.vehicles(); i++)
            out.push_back(rectangle(chain.centers[i], yaw, params.body_sizes[i].length, params.body_sizes[i].width));
        return out;
    }

    /// Seeded random world: start pose, a rectangular target at a distance in
    /// the band, then obstacles kept clear of both by r0 + margin.
    inline Scenario genScenario(const ScenarioSpec& spec, const RobotParams& params)
    {
        // same world for every trailer count up to placement_trailers
        RobotParams place = params;
        while (place.n_trailers < spec.placement_trailers)
        {
            place.n_trailers++;
            place.hitch_lengths.push_back(place.hitch_lengths.empty() ? 0.5 : place.hitch_lengths.back());
            place.body_sizes.push_back(place.body_sizes.back());
            place.wrap_radii.push_back(place.wrap_radii.back());
        }
        std::mt19937_64 rng(spec.seed);
        auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
        const double clear = params.wrap_radii[0] + spec.margin;
        const double edge = 1.0 + 0.5 * std::max(spec.target_length, spec.target_width);

        Scenario sc;
        sc.seed = spec.seed;
        sc.resolution = spec.resolution;
        sc.obstacles.bounds_min = Vec2::Zero();
        sc.obstacles.bounds_max = spec.world;

        auto inside = [&](const Polygon& poly, double pad) {
            for (const Vec2& p : poly)
                if (p.x() < pad || p.y() < pad || p.x() > spec.world.x() - pad || p.y() > spec.world.y() - pad)
                    return false;
            return true;
        };

        std::vector<Polygon> keep_clear;
        bool placed = false;
        for (int attempt = 0; attempt < spec.retries && !placed; attempt++)
        {
            const Vec2 p0(uni(0.0, spec.world.x()), uni(0.0, spec.world.y()));
            const double yaw = uni(-kPi, kPi);
            const std::vector<Polygon> bodies = straightChainBodies(place, p0, yaw);
            bool ok = true;
            for (const Polygon& b : bodies)
                ok = ok && inside(b, clear);
            if (!ok)
                continue;
            const double dist = uni(spec.band_min, spec.band_max);
            const double dir = uni(-kPi, kPi);
            const Vec2 c = p0 + dist * heading(dir);
            if (c.x() < edge || c.y() < edge || c.x() > spec.world.x() - edge || c.y() > spec.world.y() - edge)
                continue;
            const Polygon target = rectangle(c, uni(-kPi, kPi), spec.target_length, spec.target_width);
            bool apart = true;
            for (const Polygon& b : bodies)
                apart = apart && polygonGap(b, target) > 2.0 * clear;
            if (!apart)
                continue;
            sc.start.p0 = p0;
            sc.start.theta0 = yaw;
            sc.start.v0 = 0.0;
            sc.start.thetas.assign(params.n_trailers, yaw);
            sc.target = target;
            keep_clear = bodies;
            keep_clear.push_back(target);
            placed = true;
        }
        if (!placed)
            throw PlanningError(ErrorCode::GenerationFailed, "could not place start and target");

        const std::array<std::pair<int, int>, 3> kinds{{{3, spec.n_tri}, {4, spec.n_quad}, {5, spec.n_pent}}};
        for (const auto& [sides, count] : kinds)
        {
            for (int o = 0; o < count; o++)
            {
                bool done = false;
                for (int attempt = 0; attempt < spec.retries && !done; attempt++)
                {
                    const Vec2 c(uni(0.0, spec.world.x()), uni(0.0, spec.world.y()));
                    std::vector<double> angles(sides);
                    for (double& a : angles)
                        a = uni(0.0, 2.0 * kPi);
                    std::sort(angles.begin(), angles.end());
                    Polygon poly;
                    for (double a : angles)
                        poly.push_back(c + uni(spec.min_radius, spec.max_radius) * heading(a));
                    poly = convexHull(poly);
                    if (static_cast<int>(poly.size()) != sides || !inside(poly, 0.0))
                        continue;
                    bool free = true;
                    for (const Polygon& k : keep_clear)
                        free = free && polygonGap(poly, k) > clear;
                    if (!free)
                        continue;
                    sc.obstacles.polygons.push_back(poly);
                    done = true;
                }
                if (!done)
                    throw PlanningError(ErrorCode::GenerationFailed, "could not place obstacle " + std::to_string(o) +
                                                                         " with " + std::to_string(sides) + " sides");
            }
        }
        return sc;
    }
}
