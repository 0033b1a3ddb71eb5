#include "trailerplan/env.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace trailerplan;

namespace
{
    OccupancyGrid randomGrid(int w, int h, double fill, unsigned seed, double res = 0.1)
    {
        OccupancyGrid g;
        g.geometry.resolution = res;
        g.geometry.width = w;
        g.geometry.height = h;
        g.occupied.assign(g.geometry.cells(), 0);
        std::mt19937 rng(seed);
        std::bernoulli_distribution b(fill);
        for (auto& c : g.occupied)
            c = b(rng);
        return g;
    }

    // O(n^2) nearest opposite-cell scan
    std::vector<double> bruteSdf(const OccupancyGrid& g)
    {
        const GridGeometry& G = g.geometry;
        const double ceil = G.diagonal();
        std::vector<double> out(G.cells());
        for (int y = 0; y < G.height; y++)
            for (int x = 0; x < G.width; x++)
            {
                const bool occ = g.at(x, y);
                double best = std::numeric_limits<double>::infinity();
                for (int yy = 0; yy < G.height; yy++)
                    for (int xx = 0; xx < G.width; xx++)
                        if (g.at(xx, yy) != occ)
                            best = std::min(best, std::hypot(double(xx - x), double(yy - y)) * G.resolution);
                best = std::min(best, ceil);
                out[G.index(x, y)] = occ ? -best : best;
            }
        return out;
    }

    Polygon square(double x0, double y0, double side)
    {
        return {Vec2(x0, y0), Vec2(x0 + side, y0), Vec2(x0 + side, y0 + side), Vec2(x0, y0 + side)};
    }
}

TEST(Rasterize, EmptyWorld)
{
    ObstacleSet obs;
    obs.bounds_max = Vec2(2, 1);
    const OccupancyGrid g = rasterize(obs, 0.1);
    EXPECT_EQ(g.geometry.width, 20);
    EXPECT_EQ(g.geometry.height, 10);
    for (auto c : g.occupied)
        EXPECT_EQ(c, 0);
}

TEST(Rasterize, SquareCoversSixteenCells)
{
    ObstacleSet obs;
    obs.bounds_max = Vec2(2, 2);
    obs.polygons.push_back(square(0.5, 0.5, 0.4));
    const OccupancyGrid g = rasterize(obs, 0.1);
    int count = 0;
    for (auto c : g.occupied)
        count += c;
    EXPECT_EQ(count, 16);
}

TEST(Rasterize, PolygonOutsideBounds)
{
    ObstacleSet obs;
    obs.bounds_max = Vec2(2, 2);
    obs.polygons.push_back(square(5, 5, 1));
    const OccupancyGrid g = rasterize(obs, 0.1);
    for (auto c : g.occupied)
        EXPECT_EQ(c, 0);
}

TEST(Rasterize, DegenerateBounds)
{
    ObstacleSet obs;
    obs.bounds_max = Vec2(2, 0);
    try
    {
        rasterize(obs, 0.1);
        FAIL();
    }
    catch (const PlanningError& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::EmptyBounds);
    }
}

TEST(BuildSdf, SingleCellAxisAndDiagonal)
{
    OccupancyGrid g = randomGrid(9, 9, 0.0, 1, 0.2);
    g.occupied[g.geometry.index(4, 4)] = 1;
    const Sdf sdf = buildSdf(g);
    EXPECT_NEAR(sdf.at(7, 4), 0.6, 1e-12);
    EXPECT_NEAR(sdf.at(5, 5), std::sqrt(2.0) * 0.2, 1e-12);
    EXPECT_NEAR(sdf.at(4, 4), -0.2, 1e-12);
}

TEST(BuildSdf, AllOccupiedNonPositive)
{
    const Sdf sdf = buildSdf(randomGrid(12, 7, 1.0, 1));
    for (double v : sdf.values())
        EXPECT_LE(v, 0.0);
}

TEST(BuildSdf, AllFreeClampedToCeiling)
{
    const Sdf sdf = buildSdf(randomGrid(12, 7, 0.0, 1));
    for (double v : sdf.values())
        EXPECT_DOUBLE_EQ(v, sdf.ceiling());
}

TEST(BuildSdf, MatchesBruteForce)
{
    for (unsigned seed = 0; seed < 6; seed++)
    {
        const OccupancyGrid g = randomGrid(23 + seed, 17, 0.05 + 0.1 * seed, seed);
        const Sdf sdf = buildSdf(g);
        const auto ref = bruteSdf(g);
        for (std::size_t c = 0; c < ref.size(); c++)
            ASSERT_NEAR(sdf.values()[c], ref[c], 1e-9);
    }
}

// Neighbours of equal sign differ by at most one cell diagonal; across the
// boundary the values jump from +res to -res.
TEST(BuildSdf, SignMatchesOccupancyAndLipschitz)
{
    const OccupancyGrid g = randomGrid(30, 30, 0.2, 9);
    const Sdf sdf = buildSdf(g);
    const double res = g.geometry.resolution;
    auto bound = [&](int x0, int y0, int x1, int y1) {
        return g.at(x0, y0) == g.at(x1, y1) ? res * std::sqrt(2.0) + 1e-12 : 2.0 * res + 1e-12;
    };
    for (int y = 0; y < 30; y++)
        for (int x = 0; x < 30; x++)
        {
            EXPECT_EQ(sdf.at(x, y) < 0.0, g.at(x, y));
            if (x + 1 < 30)
            {
                EXPECT_LE(std::abs(sdf.at(x + 1, y) - sdf.at(x, y)), bound(x, y, x + 1, y));
            }
            if (y + 1 < 30)
            {
                EXPECT_LE(std::abs(sdf.at(x, y + 1) - sdf.at(x, y)), bound(x, y, x, y + 1));
            }
        }
}

TEST(SdfQuery, NodesMidpointsAndOutside)
{
    const OccupancyGrid g = randomGrid(10, 10, 0.3, 4, 0.5);
    const Sdf sdf = buildSdf(g);
    const GridGeometry& G = g.geometry;
    for (int y = 0; y < 10; y++)
        for (int x = 0; x < 10; x++)
            EXPECT_NEAR(sdf.query(G.cellCenter(x, y)).value, sdf.at(x, y), 1e-12);
    for (int x = 0; x + 1 < 10; x++)
    {
        const Vec2 mid = 0.5 * (G.cellCenter(x, 3) + G.cellCenter(x + 1, 3));
        const SdfSample s = sdf.query(mid);
        EXPECT_NEAR(s.value, 0.5 * (sdf.at(x, 3) + sdf.at(x + 1, 3)), 1e-12);
        EXPECT_NEAR(s.gradient.x(), (sdf.at(x + 1, 3) - sdf.at(x, 3)) / 0.5, 1e-12);
    }
    const SdfSample out = sdf.query(Vec2(-1, 2));
    EXPECT_EQ(out.value, sdf.ceiling());
    EXPECT_EQ(out.gradient, Vec2::Zero());
}

TEST(SdfQuery, GradientMatchesFiniteDifferences)
{
    const OccupancyGrid g = randomGrid(32, 32, 0.15, 21, 0.1);
    const Sdf sdf = buildSdf(g);
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(0.1, 3.1);
    const double h = 1e-5;
    int checked = 0;
    while (checked < 200)
    {
        const Vec2 p(u(rng), u(rng));
        const double fx = p.x() / 0.1 - 0.5, fy = p.y() / 0.1 - 0.5;
        const double ex = fx - std::floor(fx), ey = fy - std::floor(fy);
        if (ex < 1e-3 || ex > 1 - 1e-3 || ey < 1e-3 || ey > 1 - 1e-3)
            continue;
        const Vec2 grad = sdf.query(p).gradient;
        const double gx = (sdf.query(p + Vec2(h, 0)).value - sdf.query(p - Vec2(h, 0)).value) / (2 * h);
        const double gy = (sdf.query(p + Vec2(0, h)).value - sdf.query(p - Vec2(0, h)).value) / (2 * h);
        EXPECT_NEAR(grad.x(), gx, 1e-6);
        EXPECT_NEAR(grad.y(), gy, 1e-6);
        checked++;
    }
}

TEST(SdfQuery, CrossesZeroBetweenFreeAndOccupied)
{
    OccupancyGrid g = randomGrid(8, 8, 0.0, 1, 0.1);
    g.occupied[g.geometry.index(5, 4)] = 1;
    const Sdf sdf = buildSdf(g);
    const Vec2 a = g.geometry.cellCenter(2, 4), b = g.geometry.cellCenter(5, 4);
    EXPECT_GT(sdf.query(a).value, 0.0);
    EXPECT_LT(sdf.query(b).value, 0.0);
}

TEST(MakeTarget, UnitSquareNormals)
{
    const TargetRegion r = makeTarget({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)});
    const std::vector<Vec2> expect{Vec2(0, -1), Vec2(1, 0), Vec2(0, 1), Vec2(-1, 0)};
    for (int k = 0; k < 4; k++)
        EXPECT_NEAR((r.normals[k] - expect[k]).norm(), 0.0, 1e-15);
    EXPECT_NEAR((r.center - Vec2(0.5, 0.5)).norm(), 0.0, 1e-15);
}

TEST(MakeTarget, ClockwiseIsReoriented)
{
    const TargetRegion r = makeTarget({Vec2(0, 0), Vec2(0, 2), Vec2(2, 0)});
    for (std::size_t k = 0; k < r.edges(); k++)
    {
        EXPECT_GT(r.normals[k].dot(r.vertices[k] - r.center), 0.0);
        for (const Vec2& v : r.vertices)
            EXPECT_LE(r.normals[k].dot(v - r.vertices[k]), 1e-12);
    }
}

TEST(MakeTarget, Rejections)
{
    auto code = [](std::vector<Vec2> v) {
        try
        {
            makeTarget(std::move(v));
        }
        catch (const PlanningError& e)
        {
            return e.code();
        }
        return ErrorCode::ParseError;
    };
    EXPECT_EQ(code({Vec2(0, 0), Vec2(1, 1), Vec2(2, 2)}), ErrorCode::DegeneratePolygon);
    EXPECT_EQ(code({Vec2(0, 0), Vec2(1, 0), Vec2(1, 0), Vec2(0, 1)}), ErrorCode::DegeneratePolygon);
    EXPECT_EQ(code({Vec2(0, 0), Vec2(2, 0), Vec2(1, 0.5), Vec2(2, 2), Vec2(0, 2)}), ErrorCode::NotConvex);
}

TEST(TargetRegion, DistanceAndContains)
{
    const TargetRegion r = makeTarget({Vec2(0, 0), Vec2(2, 0), Vec2(2, 1), Vec2(0, 1)});
    EXPECT_TRUE(r.contains(Vec2(1, 0.5)));
    EXPECT_DOUBLE_EQ(r.distance(Vec2(1, 0.5)), 0.0);
    EXPECT_NEAR(r.distance(Vec2(3, 0.5)), 1.0, 1e-12);
    EXPECT_NEAR(r.distance(Vec2(3, 2)), std::sqrt(2.0), 1e-12);
}
