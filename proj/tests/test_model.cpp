#include "trailerplan/model.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace trailerplan;

namespace
{
    RobotParams chain(int n, double hitch = 1.0)
    {
        RobotParams p = benchmarkRobot(n);
        p.hitch_lengths.assign(n, hitch);
        return p;
    }
}

TEST(TrailerRates, AlignedChainIsStill)
{
    RobotParams p = chain(3);
    RobotState s;
    s.v0 = 1.7;
    s.theta0 = 0.3;
    s.thetas = {0.3, 0.3, 0.3};
    for (double r : trailerRates(p, s))
        EXPECT_DOUBLE_EQ(r, 0.0);
}

TEST(TrailerRates, SingleTrailerOffset)
{
    RobotParams p = chain(1, 2.0);
    RobotState s;
    s.v0 = 1.0;
    s.theta0 = kPi / 3.0;
    s.thetas = {0.0};
    EXPECT_NEAR(trailerRates(p, s)[0], 0.4330127018922193, 1e-12);
}

TEST(TrailerRates, PerpendicularHitchStopsSecondTrailer)
{
    RobotParams p = chain(2);
    RobotState s;
    s.v0 = 1.0;
    s.theta0 = kPi / 2.0;
    s.thetas = {0.0, 1.1};
    EXPECT_NEAR(trailerRates(p, s)[1], 0.0, 1e-15);
}

TEST(FlatEval, StraightLine)
{
    const FlatSample f = flatEval(1, 0, 0, 0, 1, 0, 0.5, 0.9);
    EXPECT_DOUBLE_EQ(f.theta0, 0.0);
    EXPECT_DOUBLE_EQ(f.v0, 1.0);
    EXPECT_DOUBLE_EQ(f.a, 0.0);
    EXPECT_DOUBLE_EQ(f.kappa, 0.0);
}

TEST(FlatEval, CircleCurvature)
{
    for (double r : {0.5, 1.0, 3.0, 20.0})
    {
        const double phi = 0.7;
        // unit-speed circle: x = r cos(s/r), y = r sin(s/r)
        const FlatSample f = flatEval(-std::sin(phi), std::cos(phi), -std::cos(phi) / r, -std::sin(phi) / r, 1, 0,
                                      0.5, 0.9);
        EXPECT_NEAR(f.kappa, 1.0 / r, 1e-12);
        EXPECT_NEAR(f.a_lat, f.v0 * f.v0 * f.kappa, 0.0);
    }
}

TEST(FlatEval, ZeroArcSpeedIsRegular)
{
    const FlatSample f = flatEval(1, 0, 0, 0, 0, 2, 0.5, 0.9);
    EXPECT_DOUBLE_EQ(f.v0, 0.0);
    EXPECT_DOUBLE_EQ(f.a, 2.0);
    EXPECT_TRUE(std::isfinite(f.kappa));
}

TEST(FlatEval, RejectsShortTangent)
{
    try
    {
        flatEval(0.5, 0.5, 0, 0, 1, 0, 0.5, 0.9);
        FAIL();
    }
    catch (const PlanningError& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateTangent);
    }
}

TEST(FlatEval, RandomInputsFinite)
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 2000; k++)
    {
        double dx = u(rng), dy = u(rng);
        if (dx * dx + dy * dy < 0.9)
            continue;
        const double sd = k % 5 == 0 ? 0.0 : std::abs(u(rng));
        const FlatSample f = flatEval(dx, dy, u(rng), u(rng), sd, u(rng), 0.5, 0.9);
        EXPECT_TRUE(std::isfinite(f.v0) && std::isfinite(f.a) && std::isfinite(f.kappa) && std::isfinite(f.a_lat));
    }
}

// classical maps for a unit-speed curve: theta' = kappa, v = s_dot, a = s_ddot
TEST(FlatEval, UnslackenedMatchesClassical)
{
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 200; k++)
    {
        const double phi = u(rng), kap = u(rng), v = std::abs(u(rng)) + 0.1, acc = u(rng);
        const double dx = std::cos(phi), dy = std::sin(phi);
        const double ddx = -kap * dy, ddy = kap * dx;
        const FlatSample f = flatEval(dx, dy, ddx, ddy, v, acc, 0.5, 0.9);
        EXPECT_NEAR(f.theta0, phi, 1e-10);
        EXPECT_NEAR(f.v0, v, 1e-10);
        EXPECT_NEAR(f.a, acc, 1e-10);
        EXPECT_NEAR(f.kappa, kap, 1e-10);
        EXPECT_NEAR(f.a_lat, v * v * kap, 1e-10);
    }
}

TEST(PoseChain, Collinear)
{
    RobotParams p = chain(2);
    const std::vector<double> yaws{0, 0, 0};
    const PoseChain c = poseChain(p, Vec2::Zero(), yaws);
    EXPECT_TRUE(c.positions[1].isApprox(Vec2(-1, 0)));
    EXPECT_TRUE(c.positions[2].isApprox(Vec2(-2, 0)));
    EXPECT_EQ(c.centers[2], c.positions[2]);
}

TEST(PoseChain, RearOffsetAndPerpendicularTrailer)
{
    RobotParams p = chain(1);
    p.rear_offset = 0.1;
    const std::vector<double> yaws{0, kPi / 2.0};
    const PoseChain c = poseChain(p, Vec2::Zero(), yaws);
    EXPECT_NEAR((c.centers[0] - Vec2(0.1, 0)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((c.positions[1] - Vec2(0, -1)).norm(), 0.0, 1e-15);
}

TEST(PoseChain, RotationEquivariant)
{
    RobotParams p = chain(3, 0.7);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 50; k++)
    {
        const std::vector<double> yaws{u(rng), u(rng), u(rng), u(rng)};
        const Vec2 p0(u(rng), u(rng));
        const double phi = u(rng);
        const Eigen::Rotation2Dd rot(phi);
        std::vector<double> rotated = yaws;
        for (double& y : rotated)
            y += phi;
        const PoseChain a = poseChain(p, p0, yaws);
        const PoseChain b = poseChain(p, rot * p0, rotated);
        for (int i = 0; i < 4; i++)
        {
            EXPECT_NEAR((rot * a.positions[i] - b.positions[i]).norm(), 0.0, 1e-12);
            EXPECT_NEAR((rot * a.centers[i] - b.centers[i]).norm(), 0.0, 1e-12);
        }
    }
}

TEST(Rollout, Straight)
{
    RobotParams p = chain(2);
    RobotState s;
    s.thetas = {0, 0};
    const auto trace = rollout(p, s, [](double) { return Control{1.0, 0.0}; }, 1e-3, 1000);
    ASSERT_EQ(trace.size(), 1001u);
    EXPECT_NEAR(trace.back().p0.x(), 1.0, 1e-12);
    EXPECT_NEAR(trace.back().p0.y(), 0.0, 1e-12);
    EXPECT_NEAR(trace.back().thetas[0], 0.0, 1e-15);
}

TEST(Rollout, FullSteerMatchesCircle)
{
    RobotParams p = benchmarkRobot(0);
    RobotState s;
    const double delta = p.limits.steer_max;
    const double w = std::tan(delta) / p.wheelbase;
    const double dt = 1e-3;
    const auto trace = rollout(p, s, [&](double) { return Control{1.0, delta}; }, dt, 2000);
    for (std::size_t k = 0; k < trace.size(); k += 100)
    {
        const double t = k * dt;
        const double r = 1.0 / w;
        EXPECT_NEAR(trace[k].theta0, w * t, 1e-9);
        EXPECT_NEAR(trace[k].p0.x(), r * std::sin(w * t), 1e-9);
        EXPECT_NEAR(trace[k].p0.y(), r * (1.0 - std::cos(w * t)), 1e-9);
    }
}

TEST(Rollout, ZeroInputIsConstant)
{
    RobotParams p = chain(1);
    RobotState s;
    s.p0 = Vec2(2, 3);
    s.theta0 = 0.2;
    s.thetas = {-0.1};
    const auto trace = rollout(p, s, [](double) { return Control{0.0, 0.4}; }, 1e-3, 500);
    EXPECT_EQ(trace.back().p0, s.p0);
    EXPECT_EQ(trace.back().thetas, s.thetas);
}

TEST(Rollout, DetectsJackknife)
{
    RobotParams p = chain(1, 0.5);
    RobotState s;
    s.thetas = {0.0};
    try
    {
        rollout(p, s, [](double) { return Control{1.0, 1.5}; }, 1e-3, 20000);
        FAIL();
    }
    catch (const PlanningError& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::JackknifeDetected);
    }
}

TEST(RobotParams, BenchmarkValidates)
{
    for (int n = 0; n <= 3; n++)
        EXPECT_NO_THROW(benchmarkRobot(n).validate());
    RobotParams p = benchmarkRobot(1);
    p.limits.kappa_max = 10.0;
    EXPECT_THROW(p.validate(), PlanningError);
}
