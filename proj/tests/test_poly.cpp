#include "trailerplan/poly.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace trailerplan;

namespace
{
    struct Instance
    {
        Eigen::MatrixXd waypoints;
        Eigen::VectorXd lengths;
        SplineBoundary boundary;
    };

    Instance randomInstance(int m, int d, std::mt19937& rng)
    {
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        std::uniform_real_distribution<double> len(0.3, 2.5);
        Instance in;
        in.waypoints.resize(d, m - 1);
        for (int i = 0; i < in.waypoints.size(); i++)
            in.waypoints.data()[i] = u(rng);
        in.lengths.resize(m);
        for (int j = 0; j < m; j++)
            in.lengths(j) = len(rng);
        auto vec = [&] {
            Eigen::VectorXd v(d);
            for (int k = 0; k < d; k++)
                v(k) = u(rng);
            return v;
        };
        in.boundary = {vec(), vec(), vec(), vec()};
        return in;
    }

    // Dense assembly straight from the interpolation conditions.
    Eigen::MatrixXd denseSolve(const Instance& in)
    {
        const int m = static_cast<int>(in.lengths.size());
        const int d = static_cast<int>(in.boundary.start_value.size());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6 * m, 6 * m);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6 * m, d);
        int row = 0;
        for (int k = 0; k < 3; k++, row++)
            a.block(row, 0, 1, 6) = basis(0.0, k).transpose();
        b.row(0) = in.boundary.start_value.transpose();
        b.row(1) = in.boundary.start_deriv.transpose();
        for (int i = 0; i + 1 < m; i++)
        {
            const double t = in.lengths(i);
            a.block(row, 6 * i, 1, 6) = basis(t, 0).transpose();
            b.row(row++) = in.waypoints.col(i).transpose();
            for (int k = 0; k <= 4; k++, row++)
            {
                a.block(row, 6 * i, 1, 6) = basis(t, k).transpose();
                a.block(row, 6 * i + 6, 1, 6) = -basis(0.0, k).transpose();
            }
        }
        const double t = in.lengths(m - 1);
        for (int k = 0; k < 3; k++, row++)
            a.block(row, 6 * (m - 1), 1, 6) = basis(t, k).transpose();
        b.row(row - 3) = in.boundary.end_value.transpose();
        b.row(row - 2) = in.boundary.end_deriv.transpose();
        return a.fullPivLu().solve(b);
    }
}

TEST(Minco, SinglePieceLine)
{
    const double s = 3.0;
    SplineBoundary bc{Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0),
                      Eigen::VectorXd::Constant(1, s), Eigen::VectorXd::Constant(1, 1.0)};
    const QuinticSpline sp = mincoSolve(Eigen::MatrixXd(1, 0), Eigen::VectorXd::Constant(1, s), bc);
    Eigen::VectorXd expect = Eigen::VectorXd::Zero(6);
    expect(1) = 1.0;
    EXPECT_NEAR((sp.coeffs().col(0) - expect).norm(), 0.0, 1e-12);
}

TEST(Minco, TwoPieceSymmetricLine)
{
    SplineBoundary bc{Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0),
                      Eigen::VectorXd::Constant(1, 4.0), Eigen::VectorXd::Constant(1, 1.0)};
    const QuinticSpline sp = mincoSolve(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(2, 2.0), bc);
    for (int j = 0; j < 2; j++)
        for (int k = 2; k < 6; k++)
            EXPECT_NEAR(sp.coeffs()(6 * j + k, 0), 0.0, 1e-12);
}

TEST(Minco, BandedMatchesDense)
{
    std::mt19937 rng(1);
    for (int trial = 0; trial < 30; trial++)
    {
        const Instance in = randomInstance(2 + trial % 9, 1 + trial % 3, rng);
        const QuinticSpline sp = mincoSolve(in.waypoints, in.lengths, in.boundary);
        const Eigen::MatrixXd ref = denseSolve(in);
        EXPECT_LT((sp.coeffs() - ref).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Minco, ContinuityAndBoundary)
{
    std::mt19937 rng(2);
    for (int trial = 0; trial < 20; trial++)
    {
        const Instance in = randomInstance(2 + trial % 7, 2, rng);
        const QuinticSpline sp = mincoSolve(in.waypoints, in.lengths, in.boundary);
        for (int j = 0; j + 1 < sp.pieces(); j++)
        {
            for (int k = 0; k <= 4; k++)
                EXPECT_LT((sp.evalPiece(j, in.lengths(j), k) - sp.evalPiece(j + 1, 0.0, k)).norm(), 1e-8);
            EXPECT_LT((sp.evalPiece(j, in.lengths(j), 0) - in.waypoints.col(j)).norm(), 1e-10);
        }
        const int last = sp.pieces() - 1;
        const double tl = in.lengths(last);
        EXPECT_LT((sp.evalPiece(0, 0, 0) - in.boundary.start_value).norm(), 1e-10);
        EXPECT_LT((sp.evalPiece(0, 0, 1) - in.boundary.start_deriv).norm(), 1e-10);
        EXPECT_LT(sp.evalPiece(0, 0, 2).norm(), 1e-10);
        EXPECT_LT((sp.evalPiece(last, tl, 0) - in.boundary.end_value).norm(), 1e-10);
        EXPECT_LT((sp.evalPiece(last, tl, 1) - in.boundary.end_deriv).norm(), 1e-10);
        EXPECT_LT(sp.evalPiece(last, tl, 2).norm(), 1e-10);
    }
}

TEST(Minco, ResolveIsBitIdentical)
{
    std::mt19937 rng(3);
    const Instance in = randomInstance(6, 2, rng);
    const QuinticSpline a = mincoSolve(in.waypoints, in.lengths, in.boundary);
    const QuinticSpline b = mincoSolve(in.waypoints, in.lengths, in.boundary);
    EXPECT_TRUE((a.coeffs().array() == b.coeffs().array()).all());
}

TEST(Minco, NonPositiveLengthIsSingular)
{
    std::mt19937 rng(4);
    Instance in = randomInstance(3, 1, rng);
    in.lengths(1) = 0.0;
    try
    {
        mincoSolve(in.waypoints, in.lengths, in.boundary);
        FAIL();
    }
    catch (const PlanningError& e)
    {
        EXPECT_EQ(e.code(), ErrorCode::SingularSystem);
    }
}

TEST(QuinticSpline, LocateAndDomain)
{
    std::mt19937 rng(5);
    const Instance in = randomInstance(3, 1, rng);
    const QuinticSpline sp = mincoSolve(in.waypoints, in.lengths, in.boundary);
    EXPECT_EQ(sp.locate(0.0).first, 0);
    EXPECT_EQ(sp.locate(in.lengths(0)).first, 1);
    EXPECT_EQ(sp.locate(sp.total()).first, 2);
    EXPECT_THROW(sp.eval(sp.total() + 0.1, 0), PlanningError);
    EXPECT_THROW(sp.eval(-0.1, 0), PlanningError);
    EXPECT_NEAR(sp.eval(0.0, 0)(0, 0), in.boundary.start_value(0), 1e-12);
}

TEST(QuinticSpline, DerivativesMatchFiniteDifferences)
{
    std::mt19937 rng(6);
    const Instance in = randomInstance(4, 1, rng);
    const QuinticSpline sp = mincoSolve(in.waypoints, in.lengths, in.boundary);
    std::uniform_real_distribution<double> u(0.01, sp.total() - 0.01);
    const double h = 1e-6;
    for (int k = 0; k < 50; k++)
    {
        const double q = u(rng);
        const auto [j, tau] = sp.locate(q);
        for (int order = 1; order <= 3; order++)
        {
            const double fd = (sp.evalPiece(j, tau + h, order - 1)(0) - sp.evalPiece(j, tau - h, order - 1)(0)) / (2 * h);
            EXPECT_NEAR(sp.evalPiece(j, tau, order)(0), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(JerkEnergy, LinearAndCubic)
{
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(6, 1);
    c(1, 0) = 2.0;
    c(0, 0) = 1.0;
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
    EXPECT_DOUBLE_EQ(jerkEnergy(QuinticSpline(Eigen::VectorXd::Ones(1), c), w).cost, 0.0);
    c.setZero();
    c(3, 0) = 1.0;
    EXPECT_NEAR(jerkEnergy(QuinticSpline(Eigen::VectorXd::Ones(1), c), w).cost, 36.0, 1e-12);
    EXPECT_NEAR(jerkEnergy(QuinticSpline(Eigen::VectorXd::Ones(1), c), 3.5 * w).cost, 126.0, 1e-12);
}

TEST(JerkEnergy, MatchesQuadrature)
{
    std::mt19937 rng(7);
    const Instance in = randomInstance(3, 2, rng);
    const QuinticSpline sp = mincoSolve(in.waypoints, in.lengths, in.boundary);
    Eigen::VectorXd w(2);
    w << 1.0, 2.5;
    // 3-point Gauss-Legendre is exact for the quartic integrand
    const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double ref = 0.0;
    for (int j = 0; j < sp.pieces(); j++)
    {
        const double t = in.lengths(j);
        for (int q = 0; q < 3; q++)
        {
            const Eigen::VectorXd j3 = sp.evalPiece(j, 0.5 * t * (gx[q] + 1.0), 3);
            ref += 0.5 * t * gw[q] * (w(0) * j3(0) * j3(0) + w(1) * j3(1) * j3(1));
        }
    }
    EXPECT_NEAR(jerkEnergy(sp, w).cost, ref, 1e-9 * std::max(1.0, ref));
}

namespace
{
    // jerk energy plus a fixed random functional of the coefficients
    double scalarObjective(const Instance& in, const Eigen::MatrixXd& probe, const Eigen::VectorXd& w,
                           MincoSystem& sys, MincoGradient* grad)
    {
        sys.solve(in.waypoints, in.lengths, in.boundary);
        const JerkEnergy e = jerkEnergy(sys.spline(), w);
        const double f = e.cost + (probe.array() * sys.spline().coeffs().array()).sum();
        if (grad)
            *grad = sys.propagate(e.grad_coeffs + probe, e.grad_lengths);
        return f;
    }
}

TEST(Minco, PropagateMatchesFiniteDifferences)
{
    std::mt19937 rng(8);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; trial++)
    {
        const int m = 2 + trial % 7;
        const Instance in = randomInstance(m, 2, rng);
        Eigen::MatrixXd probe(6 * m, 2);
        for (int i = 0; i < probe.size(); i++)
            probe.data()[i] = nd(rng);
        const Eigen::VectorXd w = Eigen::VectorXd::Ones(2);
        MincoSystem sys;
        MincoGradient g;
        scalarObjective(in, probe, w, sys, &g);

        const double h = 1e-6;
        auto check = [&](double analytic, auto&& perturb) {
            Instance p = in, q = in;
            perturb(p, h);
            perturb(q, -h);
            const double fd = (scalarObjective(p, probe, w, sys, nullptr) - scalarObjective(q, probe, w, sys, nullptr)) / (2 * h);
            EXPECT_NEAR(analytic, fd, 1e-5 * std::max(1.0, std::abs(fd)));
        };
        for (int i = 0; i < m - 1; i++)
            for (int k = 0; k < 2; k++)
                check(g.waypoints(k, i), [&](Instance& x, double d) { x.waypoints(k, i) += d; });
        for (int j = 0; j < m; j++)
            check(g.lengths(j), [&](Instance& x, double d) { x.lengths(j) += d; });
        for (int k = 0; k < 2; k++)
        {
            check(g.boundary.start_value(k), [&](Instance& x, double d) { x.boundary.start_value(k) += d; });
            check(g.boundary.start_deriv(k), [&](Instance& x, double d) { x.boundary.start_deriv(k) += d; });
            check(g.boundary.end_value(k), [&](Instance& x, double d) { x.boundary.end_value(k) += d; });
            check(g.boundary.end_deriv(k), [&](Instance& x, double d) { x.boundary.end_deriv(k) += d; });
        }
    }
}

TEST(Minco, ConstantObjectiveHasZeroGradient)
{
    std::mt19937 rng(9);
    const Instance in = randomInstance(4, 1, rng);
    MincoSystem sys;
    sys.solve(in.waypoints, in.lengths, in.boundary);
    const MincoGradient g = sys.propagate(Eigen::MatrixXd::Zero(24, 1), Eigen::VectorXd::Zero(4));
    EXPECT_EQ(g.waypoints.norm(), 0.0);
    EXPECT_EQ(g.lengths.norm(), 0.0);
}

TEST(Minco, WaypointOnlyObjective)
{
    // f = value at the end of piece 0 equals the first waypoint
    std::mt19937 rng(10);
    const Instance in = randomInstance(3, 1, rng);
    MincoSystem sys;
    sys.solve(in.waypoints, in.lengths, in.boundary);
    Eigen::MatrixXd gc = Eigen::MatrixXd::Zero(18, 1);
    gc.block(0, 0, 6, 1) = basis(in.lengths(0), 0);
    Eigen::VectorXd gl = Eigen::VectorXd::Zero(3);
    gl(0) = sys.spline().evalPiece(0, in.lengths(0), 1)(0);
    const MincoGradient g = sys.propagate(gc, gl);
    EXPECT_NEAR(g.waypoints(0, 0), 1.0, 1e-10);
    EXPECT_NEAR(g.waypoints(0, 1), 0.0, 1e-10);
    EXPECT_NEAR(g.lengths(0), 0.0, 1e-9);
}
