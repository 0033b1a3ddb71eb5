#include "trailerplan/search.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace trailerplan;

namespace
{
    Polygon box(double x0, double y0, double x1, double y1)
    {
        return {Vec2(x0, y0), Vec2(x1, y0), Vec2(x1, y1), Vec2(x0, y1)};
    }

    Sdf world(const std::vector<Polygon>& polys, double size = 20.0)
    {
        ObstacleSet obs;
        obs.bounds_min = Vec2(0.0, 0.0);
        obs.bounds_max = Vec2(size, size);
        obs.polygons = polys;
        return buildSdf(rasterize(obs, 0.1));
    }

    RobotState startAt(double x, double y, double yaw, int n)
    {
        RobotState s;
        s.p0 = Vec2(x, y);
        s.theta0 = yaw;
        s.thetas.assign(n, yaw);
        return s;
    }

    // endpoint of a Dubins path by integrating its own segment list
    Pose2 endpoint(const DubinsPath& p)
    {
        Pose2 q = p.start;
        const auto k = p.kinds();
        for (int i = 0; i < 3; i++)
            q = DubinsPath::advance(q, k[i] / p.radius, p.segments[i]);
        return q;
    }
}

TEST(Search, GetEndsUnitSquare)
{
    RobotParams params = benchmarkRobot(1);
    params.rear_offset = 0.1;
    params.tractor_length = 0.6;
    const TargetRegion r = makeTarget(box(-0.5, -0.5, 0.5, 0.5));
    const auto ends = getEnds(r, params);
    ASSERT_EQ(ends.size(), 4u);
    bool seen = false;
    for (const Pose2& e : ends)
        if (std::abs(wrapAngle(e.yaw)) < 1e-12)
        {
            EXPECT_NEAR(e.x, 0.1, 1e-12);
            EXPECT_NEAR(e.y, 0.0, 1e-12);
            seen = true;
        }
    EXPECT_TRUE(seen);
}

TEST(Search, GetEndsRegularPolygonSymmetric)
{
    const RobotParams params = benchmarkRobot(2);
    const int n = 6;
    std::vector<Vec2> v;
    for (int k = 0; k < n; k++)
        v.emplace_back(3.0 + 2.0 * std::cos(2 * kPi * k / n), 4.0 + 2.0 * std::sin(2 * kPi * k / n));
    const TargetRegion r = makeTarget(v);
    const auto ends = getEnds(r, params);
    ASSERT_EQ(ends.size(), static_cast<std::size_t>(n));
    const double step = 2 * kPi / n;
    for (int k = 1; k < n; k++)
    {
        const Vec2 d0 = ends[0].position() - Vec2(3.0, 4.0);
        const Eigen::Rotation2Dd rot(k * step);
        const Vec2 expect = Vec2(3.0, 4.0) + rot * d0;
        EXPECT_NEAR((ends[k].position() - expect).norm(), 0.0, 1e-12);
        EXPECT_NEAR(wrapAngle(ends[k].yaw - ends[0].yaw - k * step), 0.0, 1e-12);
    }
}

TEST(Dubins, StraightAndIdentity)
{
    const DubinsPath p = dubinsConnect({0, 0, 0}, {5, 0, 0}, 1.0);
    EXPECT_NEAR(p.length(), 5.0, 1e-12);
    const DubinsPath z = dubinsConnect({1, 2, 0.3}, {1, 2, 0.3}, 1.0);
    EXPECT_NEAR(z.length(), 0.0, 1e-12);
}

TEST(Dubins, UTurnBoundedByAnalyticLsl)
{
    // two left circles centred (0,1) and (0,3): quarter arc, 2 m straight, quarter arc
    const auto lsl = dubinsWordPath({0, 0, 0}, {0, 4, kPi}, 1.0, DubinsWord::LSL);
    ASSERT_TRUE(lsl);
    EXPECT_NEAR(lsl->length(), kPi + 2.0, 1e-12);
    EXPECT_LE(dubinsConnect({0, 0, 0}, {0, 4, kPi}, 1.0).length(), kPi + 2.0 + 1e-12);
}

TEST(Dubins, EveryWordReachesTheGoal)
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> pos(-6.0, 6.0), ang(-kPi, kPi);
    int words = 0;
    for (int trial = 0; trial < 300; trial++)
    {
        const Pose2 a{pos(rng), pos(rng), ang(rng)};
        const Pose2 b{pos(rng), pos(rng), ang(rng)};
        const double r = 0.5 + 0.01 * trial;
        const DubinsPath bestp = dubinsConnect(a, b, r);
        for (DubinsWord w : {DubinsWord::LSL, DubinsWord::RSR, DubinsWord::LSR, DubinsWord::RSL, DubinsWord::RLR,
                             DubinsWord::LRL})
        {
            const auto p = dubinsWordPath(a, b, r, w);
            if (!p)
                continue;
            words++;
            const Pose2 e = endpoint(*p);
            EXPECT_NEAR(e.x, b.x, 1e-9);
            EXPECT_NEAR(e.y, b.y, 1e-9);
            EXPECT_NEAR(wrapAngle(e.yaw - b.yaw), 0.0, 1e-9);
            EXPECT_LE(bestp.length(), p->length() + 1e-12);
        }
        const Pose2 s = bestp.sample(bestp.length());
        EXPECT_NEAR((s.position() - b.position()).norm(), 0.0, 1e-9);
    }
    EXPECT_GT(words, 300 * 4);
}

TEST(Search, ExpandStraightAndTurn)
{
    const RobotParams params = benchmarkRobot(1);
    const SearchConfig cfg;
    const Sdf sdf = world({});
    Pose2 out;
    double cost = 0.0;
    const Pose2 from{5.0, 5.0, 0.4};
    ASSERT_EQ(expand(from, {1.2, 0.0}, 0.5, sdf, params, cfg, out, cost), ExpandResult::Ok);
    EXPECT_NEAR(out.x, 5.0 + 0.6 * std::cos(0.4), 1e-12);
    EXPECT_NEAR(out.y, 5.0 + 0.6 * std::sin(0.4), 1e-12);
    EXPECT_NEAR(out.yaw, 0.4, 1e-12);

    const double smax = params.limits.steer_max;
    ASSERT_EQ(expand(from, {1.2, smax}, 0.5, sdf, params, cfg, out, cost), ExpandResult::Ok);
    EXPECT_NEAR(out.yaw - 0.4, 0.5 * 1.2 * std::tan(smax) / params.wheelbase, 1e-12);
    EXPECT_GT(cost, 0.0);
}

TEST(Search, ExpandRejects)
{
    const RobotParams params = benchmarkRobot(1);
    const SearchConfig cfg;
    const Sdf sdf = world({box(6.0, 0.0, 7.0, 20.0)});
    Pose2 out;
    double cost = 0.0;
    EXPECT_EQ(expand({5.0, 5.0, 0.0}, {1.2, 0.0}, 0.5, sdf, params, cfg, out, cost), ExpandResult::Collision);
    EXPECT_EQ(expand({19.8, 5.0, 0.0}, {1.2, 0.0}, 0.5, sdf, params, cfg, out, cost), ExpandResult::OutOfMap);
}

TEST(Search, TrailerPropagationStraightAndEmpty)
{
    const RobotParams params = benchmarkRobot(3);
    std::vector<PathSample> samples;
    for (int k = 0; k <= 20; k++)
    {
        PathSample s;
        s.t = 0.1 * k;
        s.p = Vec2(0.12 * k, 0.0);
        samples.push_back(s);
    }
    propagateTrailers(params, samples, {0.0, 0.0, 0.0}, 10);
    for (const auto& s : samples)
        for (double th : s.thetas)
            EXPECT_DOUBLE_EQ(th, 0.0);

    std::vector<PathSample> one(1);
    propagateTrailers(params, one, {0.1, 0.2, 0.3}, 10);
    EXPECT_EQ(one[0].thetas, (std::vector<double>{0.1, 0.2, 0.3}));
}

TEST(Search, TrailerPropagationMatchesRollout)
{
    const RobotParams params = benchmarkRobot(2);
    const double v = 1.2, steer = 0.3, dt = 0.02;
    const int steps = 1500;
    RobotState st = startAt(0.0, 0.0, 0.0, 2);
    const auto trace = rollout(params, st, [&](double) { return Control{v, steer}; }, dt, steps);

    const double kappa = std::tan(steer) / params.wheelbase;
    std::vector<PathSample> samples;
    for (int k = 0; k <= steps; k++)
    {
        const Pose2 p = DubinsPath::advance({0, 0, 0}, kappa, v * dt * k);
        PathSample s;
        s.t = dt * k;
        s.p = p.position();
        s.theta0 = p.yaw;
        samples.push_back(s);
    }
    propagateTrailers(params, samples, {0.0, 0.0}, 10);
    const auto& a = trace.back();
    const auto& b = samples.back();
    EXPECT_NEAR(wrapAngle(a.theta0 - a.thetas[0]), wrapAngle(b.theta0 - b.thetas[0]), 0.05);
    EXPECT_NEAR(wrapAngle(a.thetas[0] - a.thetas[1]), wrapAngle(b.thetas[0] - b.thetas[1]), 0.05);
}

TEST(Search, EmptyMapShootsStraight)
{
    const RobotParams params = benchmarkRobot(1);
    SearchConfig cfg;
    const Sdf sdf = world({});
    const TargetRegion region = makeTarget(box(12.0, 8.0, 15.0, 12.0));
    const auto ends = getEnds(region, params);
    int right = -1;
    for (std::size_t e = 0; e < ends.size(); e++)
        if (std::abs(wrapAngle(ends[e].yaw)) < 1e-9)
            right = static_cast<int>(e);
    ASSERT_GE(right, 0);
    const RobotState start = startAt(ends[right].x - 5.0, ends[right].y, 0.0, 1);
    const SearchResult res = search(sdf, start, region, params, cfg);
    bool seen = false;
    for (const auto& c : res.candidates)
        if (c.terminal == right)
        {
            EXPECT_NEAR(c.length, 5.0, cfg.xy_resolution);
            seen = true;
        }
    EXPECT_TRUE(seen);
    for (const auto& c : res.candidates)
        EXPECT_LE(res.path.score, c.score);
}

TEST(Search, EnclosedStartHasNoPath)
{
    const RobotParams params = benchmarkRobot(1);
    const Sdf sdf = world({box(3.0, 3.0, 7.0, 3.5), box(3.0, 6.5, 7.0, 7.0), box(3.0, 3.0, 3.5, 7.0),
                           box(6.5, 3.0, 7.0, 7.0)});
    const TargetRegion region = makeTarget(box(14.0, 14.0, 17.0, 17.0));
    try
    {
        search(sdf, startAt(4.6, 5.0, 0.0, 1), region, params, SearchConfig{});
        FAIL() << "expected NoPath";
    }
    catch (const PlanningError& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::NoPath);
    }
}

TEST(Search, WallWithGap)
{
    const RobotParams params = benchmarkRobot(2);
    SearchConfig cfg;
    const Sdf sdf = world({box(9.5, 0.0, 10.5, 11.0), box(9.5, 14.0, 10.5, 20.0)});
    const TargetRegion region = makeTarget(box(15.0, 3.0, 18.0, 7.0));
    const RobotState start = startAt(3.0, 5.0, 0.0, 2);
    const SearchResult res = search(sdf, start, region, params, cfg);
    const double straight = (region.center - start.p0).norm();
    EXPECT_GT(res.path.length, straight);
    double prev_t = -1.0;
    for (const auto& s : res.path.samples)
    {
        const Pose2 p{s.p.x(), s.p.y(), s.theta0};
        EXPECT_TRUE(tractorClear(sdf, params, p, 0.0));
        EXPECT_GT(s.t, prev_t);
        prev_t = s.t;
        EXPECT_EQ(s.thetas.size(), 2u);
    }
    // selection is the minimum of the recomputed scores
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : res.candidates)
        best = std::min(best, scorePath(c, region, params, cfg));
    EXPECT_DOUBLE_EQ(scorePath(res.path, region, params, cfg), best);
}

TEST(Search, Deterministic)
{
    const RobotParams params = benchmarkRobot(1);
    const Sdf sdf = world({box(8.0, 4.0, 9.0, 12.0)});
    const TargetRegion region = makeTarget(box(14.0, 7.0, 17.0, 10.0));
    const RobotState start = startAt(3.0, 8.0, 0.2, 1);
    const SearchResult a = search(sdf, start, region, params, SearchConfig{});
    const SearchResult b = search(sdf, start, region, params, SearchConfig{});
    ASSERT_EQ(a.path.samples.size(), b.path.samples.size());
    for (std::size_t k = 0; k < a.path.samples.size(); k++)
    {
        EXPECT_EQ(a.path.samples[k].p, b.path.samples[k].p);
        EXPECT_EQ(a.path.samples[k].thetas, b.path.samples[k].thetas);
    }
    EXPECT_EQ(a.path.score, b.path.score);
}
