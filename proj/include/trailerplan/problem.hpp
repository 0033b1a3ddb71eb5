#pragma once

#include "trailerplan/alm.hpp"
#include "trailerplan/env.hpp"
#include "trailerplan/model.hpp"
#include "trailerplan/path.hpp"
#include "trailerplan/poly.hpp"
#include "trailerplan/transforms.hpp"

#include <algorithm>
#include <array>

namespace trailerplan
{
    struct TrajectoryWeights
    {
        double x = 1.0;
        double y = 1.0;
        double s = 1.0;
        double theta = 1.0;
        double time = 10.0;  // rho_t
    };

    struct SolverConfig
    {
        int pieces = 0;              // M; 0 picks it from the path length
        double piece_length = 1.5;   // target S_j when pieces == 0
        int min_pieces = 3;
        int max_pieces = 40;
        int stamps = 12;             // K per piece
        int theta_ratio = 2;         // Omega = theta_ratio * M
        double guess_speed_ratio = 0.6;
        double sdf_margin = 0.05;    // added to every wrap radius
        double tangent_margin = 0.01;   // added to the slack floor at the stamps
        TrajectoryWeights weights;
        AlmConfig alm;

        SolverConfig()
        {
            alm.rho_init = 30.0;
            alm.inner.g_epsilon = 1e-5;
            alm.inner.delta = 1e-5;
            alm.inner.max_iterations = 500;
        }
    };

    /// Offsets of each block inside the flat decision vector.
    struct DecisionLayout
    {
        int m = 0, omega = 0, n = 0;
        int waypoints = 0, lengths = 0, yaws = 0, end = 0, offsets = 0, duration = 0, size = 0;

        DecisionLayout() = default;
        DecisionLayout(int m_, int omega_, int n_) : m(m_), omega(omega_), n(n_)
        {
            waypoints = 0;
            lengths = waypoints + 2 * (m - 1);
            yaws = lengths + m;
            end = yaws + n * (omega - 1);
            offsets = end + 3;
            duration = offsets + n;
            size = duration + 1;
        }
    };

    /// Decision variables in physical units.
    struct DecisionVector
    {
        Eigen::MatrixXd P;       // 2 x (M - 1)
        Eigen::VectorXd S;       // M, positive
        Eigen::MatrixXd Theta;   // N x (Omega - 1)
        Vec2 end_position = Vec2::Zero();
        double end_yaw = 0.0;
        Eigen::VectorXd end_offsets;  // N, theta_{i-1} - theta_i at the end
        double duration = 0.0;

        /// theta_0 ... theta_N at the end of the trajectory.
        std::vector<double> endYaws() const
        {
            std::vector<double> y{end_yaw};
            for (int i = 0; i < end_offsets.size(); i++)
                y.push_back(y.back() - end_offsets(i));
            return y;
        }
    };

    namespace detail
    {
        // natural basis and its first three derivatives at t
        inline void basisRows(double t, double b[4][6])
        {
            const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
            b[0][0] = 1.0; b[0][1] = t;   b[0][2] = t2;       b[0][3] = t3;        b[0][4] = t4;        b[0][5] = t5;
            b[1][0] = 0.0; b[1][1] = 1.0; b[1][2] = 2.0 * t;  b[1][3] = 3.0 * t2;  b[1][4] = 4.0 * t3;  b[1][5] = 5.0 * t4;
            b[2][0] = 0.0; b[2][1] = 0.0; b[2][2] = 2.0;      b[2][3] = 6.0 * t;   b[2][4] = 12.0 * t2; b[2][5] = 20.0 * t3;
            b[3][0] = 0.0; b[3][1] = 0.0; b[3][2] = 0.0;      b[3][3] = 6.0;       b[3][4] = 24.0 * t;  b[3][5] = 60.0 * t2;
        }

        inline double dotRow(const double* b, const Eigen::MatrixXd& c, int row0, int col)
        {
            double v = 0.0;
            for (int k = 0; k < 6; k++)
                v += b[k] * c(row0 + k, col);
            return v;
        }

        inline void addRow(const double* b, double w, Eigen::MatrixXd& g, int row0, int col)
        {
            if (w == 0.0)
                return;
            for (int k = 0; k < 6; k++)
                g(row0 + k, col) += b[k] * w;
        }
    }

    /// The transcribed trajectory optimization problem over a flat decision
    /// vector. Equality constraints are the kinematic residuals at every
    /// stamp; inequality constraints follow in a fixed per-stamp order and
    /// end with the end-region half-planes.
    class TrajectoryProblem
    {
    public:
        TrajectoryProblem(const RobotParams& params, const RobotState& start, const Sdf& sdf,
                          const TargetRegion& region, int pieces, const SolverConfig& cfg)
            : params_(params), start_(start), sdf_(sdf), region_(region), cfg_(cfg),
              layout_(pieces, cfg.theta_ratio * pieces, params.n_trailers)
        {
            params_.validate();
            if (pieces < 1)
                throw PlanningError(ErrorCode::InvalidConfig, "at least one piece is required");
            if (cfg.theta_ratio < 2 || cfg.stamps < 1)
                throw PlanningError(ErrorCode::InvalidConfig, "theta_ratio must be >= 2 and stamps >= 1");
            if (static_cast<int>(start_.thetas.size()) != params_.n_trailers)
                throw PlanningError(ErrorCode::InvalidConfig, "start state has the wrong number of trailer yaws");
            // unwrap trailer yaws along the chain
            double prev = start_.theta0;
            for (double& th : start_.thetas)
            {
                th = prev - wrapAngle(prev - th);
                prev = th;
            }
            theta_rate0_.resize(params_.n_trailers);
            const std::vector<double> rates = trailerRates(params_, start_);
            for (int i = 0; i < params_.n_trailers; i++)
                theta_rate0_(i) = rates[i];
            for (int i = 0; i < params_.vehicles(); i++)
                for (int j = i + 2; j < params_.vehicles(); j++)
                    pairs_.push_back({i, j});
        }

        const DecisionLayout& layout() const { return layout_; }
        const RobotParams& params() const { return params_; }
        const RobotState& start() const { return start_; }
        const SolverConfig& config() const { return cfg_; }
        int stampCount() const { return layout_.m * cfg_.stamps + 1; }

        DecisionVector decode(const Eigen::VectorXd& x) const
        {
            const DecisionLayout& L = layout_;
            const int n = L.n;
            DecisionVector d;
            d.P = Eigen::Map<const Eigen::MatrixXd>(x.data() + L.waypoints, 2, L.m - 1);
            d.S.resize(L.m);
            for (int j = 0; j < L.m; j++)
                d.S(j) = lc2Inv(x(L.lengths + j));
            d.Theta = Eigen::Map<const Eigen::MatrixXd>(x.data() + L.yaws, n, L.omega - 1);
            d.end_position = Vec2(x(L.end), x(L.end + 1));
            d.end_yaw = x(L.end + 2);
            d.end_offsets.resize(n);
            for (int i = 0; i < n; i++)
                d.end_offsets(i) = offsetFromImage(x(L.offsets + i), params_.limits.dtheta_max);
            d.duration = lc2Inv(x(L.duration));
            return d;
        }

        Eigen::VectorXd encode(const DecisionVector& d) const
        {
            const DecisionLayout& L = layout_;
            Eigen::VectorXd x(L.size);
            Eigen::Map<Eigen::MatrixXd>(x.data() + L.waypoints, 2, L.m - 1) = d.P;
            for (int j = 0; j < L.m; j++)
                x(L.lengths + j) = lc2(d.S(j));
            Eigen::Map<Eigen::MatrixXd>(x.data() + L.yaws, L.n, L.omega - 1) = d.Theta;
            x(L.end) = d.end_position.x();
            x(L.end + 1) = d.end_position.y();
            x(L.end + 2) = d.end_yaw;
            for (int i = 0; i < L.n; i++)
                x(L.offsets + i) = offsetToImage(d.end_offsets(i), params_.limits.dtheta_max);
            x(L.duration) = lc2(d.duration);
            return x;
        }

        /// Solves the three splines for a decision vector.
        FlatTrajectory trajectory(const Eigen::VectorXd& x)
        {
            solveSplines(decode(x));
            return current_;
        }

        /// Objective value; constraint values are pushed into `sink`. When
        /// grad is non-null it receives the gradient of objective + penalties.
        double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad, PenaltySink& sink)
        {
            const DecisionLayout& L = layout_;
            const int m = L.m, omega = L.omega, n = L.n, k_st = cfg_.stamps;
            const DecisionVector d = decode(x);
            for (int j = 0; j < m; j++)
                if (!(d.S(j) > 0.0))
                    throw PlanningError(ErrorCode::SingularSystem, "decoded segment length is not positive");
            if (!(d.duration > 0.0))
                throw PlanningError(ErrorCode::SingularSystem, "decoded duration is not positive");
            solveSplines(d);
            const double T = d.duration;
            const TrajectoryWeights& w = cfg_.weights;

            // objective
            Eigen::VectorXd wp(2);
            wp << w.x, w.y;
            const JerkEnergy e_xy = jerkEnergy(current_.xy, wp);
            const JerkEnergy e_s = jerkEnergy(current_.arc, Eigen::VectorXd::Constant(1, w.s));
            double cost = e_xy.cost + e_s.cost + w.time * T;
            gc_xy_ = e_xy.grad_coeffs;
            gc_s_ = e_s.grad_coeffs;
            Eigen::VectorXd g_len_xy = e_xy.grad_lengths;
            double g_T = w.time + e_s.grad_lengths.sum() / m;
            if (n > 0)
            {
                const JerkEnergy e_th = jerkEnergy(current_.thetas, Eigen::VectorXd::Constant(n, w.theta));
                cost += e_th.cost;
                gc_th_ = e_th.grad_coeffs;
                g_T += e_th.grad_lengths.sum() / omega;
            }
            Eigen::VectorXd g_sigma_piece = Eigen::VectorXd::Zero(m);

            // stamps
            const double T_p = T / m, T_th = T / omega;
            const Eigen::MatrixXd& cxy = current_.xy.coeffs();
            const Eigen::MatrixXd& cs = current_.arc.coeffs();
            const Eigen::MatrixXd& cth = current_.thetas.coeffs();
            std::vector<double> cum(m + 1, 0.0);
            for (int j = 0; j < m; j++)
                cum[j + 1] = cum[j] + d.S(j);

            const int total = stampCount();
            double bs[4][6] = {}, bx[4][6] = {}, bt[4][6] = {};
            for (int idx = 0; idx < total; idx++)
            {
                const bool last = idx == total - 1;
                const int j = last ? m - 1 : idx / k_st;
                const int p = last ? k_st : idx % k_st;
                const long num = static_cast<long>(j * k_st + p) * omega;
                const long den = static_cast<long>(m) * k_st;
                const int kth = std::min(static_cast<int>(num / den), omega - 1);
                const double frac_th = static_cast<double>(num - static_cast<long>(kth) * den) / static_cast<double>(den);
                const double tau_s = T_p * p / k_st;
                const double tau_th = T_th * frac_th;

                detail::basisRows(tau_s, bs);
                const int rs = 6 * j;
                const double s = detail::dotRow(bs[0], cs, rs, 0);
                const double sd = detail::dotRow(bs[1], cs, rs, 0);
                const double sdd = detail::dotRow(bs[2], cs, rs, 0);
                const double sddd = detail::dotRow(bs[3], cs, rs, 0);
                const double sigma = s - cum[j];
                detail::basisRows(sigma, bx);
                Vec2 pos, d1, d2, d3;
                for (int c = 0; c < 2; c++)
                {
                    pos(c) = detail::dotRow(bx[0], cxy, rs, c);
                    d1(c) = detail::dotRow(bx[1], cxy, rs, c);
                    d2(c) = detail::dotRow(bx[2], cxy, rs, c);
                    d3(c) = detail::dotRow(bx[3], cxy, rs, c);
                }
                const int rt = 6 * kth;
                if (n > 0)
                {
                    detail::basisRows(tau_th, bt);
                    for (int i = 0; i < n; i++)
                    {
                        th_(i) = detail::dotRow(bt[0], cth, rt, i);
                        thd_(i) = detail::dotRow(bt[1], cth, rt, i);
                        thdd_(i) = detail::dotRow(bt[2], cth, rt, i);
                    }
                }

                StampAdjoint adj = stampConstraints(pos, d1, d2, sd, sdd, sink);

                if (grad)
                {
                    for (int c = 0; c < 2; c++)
                    {
                        detail::addRow(bx[0], adj.pos(c), gc_xy_, rs, c);
                        detail::addRow(bx[1], adj.d1(c), gc_xy_, rs, c);
                        detail::addRow(bx[2], adj.d2(c), gc_xy_, rs, c);
                    }
                    const double g_sigma = adj.pos.dot(d1) + adj.d1.dot(d2) + adj.d2.dot(d3);
                    detail::addRow(bs[0], g_sigma, gc_s_, rs, 0);
                    detail::addRow(bs[1], adj.sd, gc_s_, rs, 0);
                    detail::addRow(bs[2], adj.sdd, gc_s_, rs, 0);
                    g_sigma_piece(j) += g_sigma;
                    g_T += (g_sigma * sd + adj.sd * sdd + adj.sdd * sddd) * tau_s / T;
                    if (n > 0)
                    {
                        double g_tau_th = 0.0;
                        for (int i = 0; i < n; i++)
                        {
                            detail::addRow(bt[0], g_th_(i), gc_th_, rt, i);
                            detail::addRow(bt[1], g_thd_(i), gc_th_, rt, i);
                            g_tau_th += g_th_(i) * thd_(i) + g_thd_(i) * thdd_(i);
                        }
                        g_T += g_tau_th * tau_th / T;
                    }
                }
            }

            // end region on the decoded end pose
            const std::vector<double> end_yaws = d.endYaws();
            Eigen::VectorXd g_end_yaw = Eigen::VectorXd::Zero(n + 1);
            Vec2 g_end_pos = Vec2::Zero();
            endRegionConstraints(d.end_position, end_yaws, sink, grad ? &g_end_pos : nullptr, g_end_yaw);

            if (!grad)
                return cost;

            // back through the spline maps
            grad->setZero(L.size);
            Eigen::VectorXd g_S = g_len_xy;
            {
                const MincoGradient g = minco_xy_.propagate(gc_xy_, Eigen::VectorXd::Zero(m));
                g_S += g.lengths;
                Eigen::Map<Eigen::MatrixXd>(grad->data() + L.waypoints, 2, m - 1) = g.waypoints;
                g_end_pos += g.boundary.end_value;
                g_end_yaw(0) += -std::sin(d.end_yaw) * g.boundary.end_deriv(0) + std::cos(d.end_yaw) * g.boundary.end_deriv(1);
            }
            {
                const MincoGradient g = minco_s_.propagate(gc_s_, Eigen::VectorXd::Zero(m));
                g_T += g.lengths.sum() / m;
                // waypoint j sits at cum[j + 1]; the end value at cum[m]
                double suffix = g.boundary.end_value(0);
                for (int k = m - 1; k >= 0; k--)
                {
                    g_S(k) += suffix;
                    if (k >= 1)
                        suffix += g.waypoints(0, k - 1);
                }
                // sigma = s - cum[j]
                double later = 0.0;
                for (int k = m - 1; k >= 0; k--)
                {
                    g_S(k) -= later;
                    later += g_sigma_piece(k);
                }
            }
            if (n > 0)
            {
                const MincoGradient g = minco_th_.propagate(gc_th_, Eigen::VectorXd::Zero(omega));
                g_T += g.lengths.sum() / omega;
                Eigen::Map<Eigen::MatrixXd>(grad->data() + L.yaws, n, omega - 1) = g.waypoints;
                for (int i = 0; i < n; i++)
                    g_end_yaw(i + 1) += g.boundary.end_value(i);
            }
            for (int j = 0; j < m; j++)
                (*grad)(L.lengths + j) = g_S(j) * lc2InvDerivative(x(L.lengths + j));
            (*grad)(L.end) = g_end_pos.x();
            (*grad)(L.end + 1) = g_end_pos.y();
            // end_yaws[i] = end_yaw - sum_{k<=i} offset_k
            double acc = 0.0;
            for (int i = n; i >= 1; i--)
            {
                acc += g_end_yaw(i);
                (*grad)(L.offsets + i - 1) = -acc * offsetFromImageDerivative(x(L.offsets + i - 1), params_.limits.dtheta_max);
            }
            (*grad)(L.end + 2) = g_end_yaw.sum();
            (*grad)(L.duration) = g_T * lc2InvDerivative(x(L.duration));
            return cost;
        }

    private:
        struct StampAdjoint
        {
            Vec2 pos = Vec2::Zero();
            Vec2 d1 = Vec2::Zero();
            Vec2 d2 = Vec2::Zero();
            double sd = 0.0;
            double sdd = 0.0;
        };

        void solveSplines(const DecisionVector& d)
        {
            const int m = layout_.m, omega = layout_.omega, n = layout_.n;
            SplineBoundary bxy{start_.p0, heading(start_.theta0), d.end_position, heading(d.end_yaw)};
            minco_xy_.solve(d.P, d.S, bxy);

            Eigen::MatrixXd s_wp(1, m - 1);
            double acc = 0.0;
            for (int j = 0; j + 1 < m; j++)
            {
                acc += d.S(j);
                s_wp(0, j) = acc;
            }
            SplineBoundary bs{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, start_.v0),
                              Eigen::VectorXd::Constant(1, d.S.sum()), Eigen::VectorXd::Zero(1)};
            minco_s_.solve(s_wp, Eigen::VectorXd::Constant(m, d.duration / m), bs);

            current_.xy = minco_xy_.spline();
            current_.arc = minco_s_.spline();
            if (n > 0)
            {
                const std::vector<double> ey = d.endYaws();
                Eigen::VectorXd th0 = Eigen::Map<const Eigen::VectorXd>(start_.thetas.data(), n);
                Eigen::VectorXd thf = Eigen::Map<const Eigen::VectorXd>(ey.data() + 1, n);
                SplineBoundary bt{th0, theta_rate0_, thf, Eigen::VectorXd::Zero(n)};
                minco_th_.solve(d.Theta, Eigen::VectorXd::Constant(omega, d.duration / omega), bt);
                current_.thetas = minco_th_.spline();
            }
            else
            {
                current_.thetas = QuinticSpline(Eigen::VectorXd::Constant(omega, d.duration / omega),
                                                Eigen::MatrixXd::Zero(6 * omega, 0));
            }
            th_.resize(n);
            thd_.resize(n);
            thdd_.resize(n);
            g_th_.resize(n);
            g_thd_.resize(n);
        }

        // Every per-stamp constraint; trailer-state adjoints land in g_th_, g_thd_.
        StampAdjoint stampConstraints(const Vec2& pos, const Vec2& d1, const Vec2& d2, double sd, double sdd,
                                      PenaltySink& sink)
        {
            const Limits& lim = params_.limits;
            const int n = layout_.n;
            StampAdjoint a;
            g_th_.setZero();
            g_thd_.setZero();

            const double n2 = d1.squaredNorm();
            const double nn = std::sqrt(n2);
            const double cr = d1.x() * d2.y() - d1.y() * d2.x();
            const double dt = d1.dot(d2);
            const Vec2 dcr_d1(d2.y(), -d2.x());
            const Vec2 dcr_d2(-d1.y(), d1.x());

            double w = sink.inequality(-sd);
            a.sd -= w;

            w = sink.inequality(params_.slack_floor + cfg_.tangent_margin - n2);
            a.d1 -= w * 2.0 * d1;

            const double vm2 = lim.v_max * lim.v_max;
            w = sink.inequality(sd * sd * n2 / vm2 - 1.0);
            a.sd += w * 2.0 * sd * n2 / vm2;
            a.d1 += w * sd * sd * 2.0 * d1 / vm2;

            const double acc = sdd * nn + sd * sd * dt / nn;
            const double am2 = lim.a_max * lim.a_max;
            w = sink.inequality(acc * acc / am2 - 1.0);
            {
                const double wa = w * 2.0 * acc / am2;
                a.sdd += wa * nn;
                a.sd += wa * 2.0 * sd * dt / nn;
                a.d1 += wa * (sdd * d1 / nn + sd * sd * (d2 / nn - dt * d1 / (n2 * nn)));
                a.d2 += wa * sd * sd * d1 / nn;
            }

            const double alat = sd * sd * cr / nn;
            const double al2 = lim.a_lat_max * lim.a_lat_max;
            w = sink.inequality(alat * alat / al2 - 1.0);
            {
                const double wa = w * 2.0 * alat / al2;
                a.sd += wa * 2.0 * sd * cr / nn;
                a.d1 += wa * sd * sd * (dcr_d1 / nn - cr * d1 / (n2 * nn));
                a.d2 += wa * sd * sd * dcr_d2 / nn;
            }

            const double n3 = n2 * nn;
            const double kap = cr / n3;
            const double km2 = lim.kappa_max * lim.kappa_max;
            w = sink.inequality(kap * kap / km2 - 1.0);
            {
                const double wk = w * 2.0 * kap / km2;
                a.d1 += wk * (dcr_d1 / n3 - 3.0 * cr * d1 / (n3 * n2));
                a.d2 += wk * dcr_d2 / n3;
            }

            // chain quantities
            const double yaw0 = std::atan2(d1.y(), d1.x());
            const double v0 = sd * nn;
            double g_yaw0 = 0.0;
            double g_v0 = 0.0;
            const int nv = n + 1;
            yaw_.resize(nv);
            vel_.resize(nv);
            delta_.resize(nv);
            g_vel_.setZero(nv);
            g_delta_.setZero(nv);
            yaw_(0) = yaw0;
            vel_(0) = v0;
            for (int i = 1; i <= n; i++)
            {
                yaw_(i) = th_(i - 1);
                delta_(i) = wrapAngle(yaw_(i - 1) - yaw_(i));
                vel_(i) = vel_(i - 1) * std::cos(delta_(i));
            }

            const double dm2 = lim.dtheta_max * lim.dtheta_max;
            for (int i = 1; i <= n; i++)
            {
                w = sink.inequality(delta_(i) * delta_(i) / dm2 - 1.0);
                g_delta_(i) += w * 2.0 * delta_(i) / dm2;
            }
            for (int i = 1; i <= n; i++)
            {
                const double L = params_.hitch_lengths[i - 1];
                const double sn = std::sin(delta_(i)), cs = std::cos(delta_(i));
                w = sink.equality(thd_(i - 1) * L - vel_(i - 1) * sn);
                g_thd_(i - 1) += w * L;
                g_vel_(i - 1) -= w * sn;
                g_delta_(i) -= w * vel_(i - 1) * cs;
            }

            // SDF clearance and vehicle pairs on the circle centres
            const Vec2 u = d1 / nn;
            centers_.resize(nv);
            centers_[0] = pos + params_.rear_offset * u;
            positions_.resize(nv);
            positions_[0] = pos;
            for (int i = 1; i <= n; i++)
            {
                positions_[i] = positions_[i - 1] - params_.hitch_lengths[i - 1] * heading(yaw_(i));
                centers_[i] = positions_[i];
            }
            g_centers_.assign(nv, Vec2::Zero());
            for (int i = 0; i < nv; i++)
            {
                const SdfSample q = sdf_.query(centers_[i]);
                w = sink.inequality(params_.wrap_radii[i] + cfg_.sdf_margin - q.value);
                g_centers_[i] -= w * q.gradient;
            }
            const double c2 = params_.veh_clearance * params_.veh_clearance;
            for (const auto& [i, j] : pairs_)
            {
                const Vec2 diff = centers_[i] - centers_[j];
                w = sink.inequality(1.0 - diff.squaredNorm() / c2);
                g_centers_[i] -= w * 2.0 * diff / c2;
                g_centers_[j] += w * 2.0 * diff / c2;
            }

            // back through the pose chain
            Vec2 g_p = Vec2::Zero();
            for (int i = n; i >= 1; i--)
            {
                g_p += g_centers_[i];
                const double L = params_.hitch_lengths[i - 1];
                // p_i = p_{i-1} - L (cos, sin)(yaw_i)
                const double g_yaw = L * (std::sin(yaw_(i)) * g_p.x() - std::cos(yaw_(i)) * g_p.y());
                g_th_(i - 1) += g_yaw;
            }
            a.pos += g_p + g_centers_[0];
            a.d1 += params_.rear_offset * (g_centers_[0] - u * u.dot(g_centers_[0])) / nn;

            // back through the velocity chain
            for (int i = n; i >= 1; i--)
            {
                g_vel_(i - 1) += g_vel_(i) * std::cos(delta_(i));
                g_delta_(i) -= g_vel_(i) * vel_(i - 1) * std::sin(delta_(i));
            }
            g_v0 += g_vel_(0);
            for (int i = 1; i <= n; i++)
            {
                if (i == 1)
                    g_yaw0 += g_delta_(i);
                else
                    g_th_(i - 2) += g_delta_(i);
                g_th_(i - 1) -= g_delta_(i);
            }
            a.sd += g_v0 * nn;
            a.d1 += g_v0 * sd * d1 / nn;
            a.d1 += g_yaw0 * Vec2(-d1.y(), d1.x()) / n2;
            return a;
        }

        void endRegionConstraints(const Vec2& p0, const std::vector<double>& yaws, PenaltySink& sink,
                                  Vec2* g_pos, Eigen::VectorXd& g_yaw)
        {
            const int nv = params_.vehicles();
            const PoseChain chain = poseChain(params_, p0, yaws);
            std::vector<Vec2> g_p(nv, Vec2::Zero());
            for (int i = 0; i < nv; i++)
            {
                const auto corners = bodyCorners(params_, i);
                const double c = std::cos(yaws[i]), s = std::sin(yaws[i]);
                for (const Vec2& q : corners)
                {
                    const Vec2 rq(c * q.x() - s * q.y(), s * q.x() + c * q.y());
                    const Vec2 drq(-s * q.x() - c * q.y(), c * q.x() - s * q.y());
                    for (std::size_t e = 0; e < region_.edges(); e++)
                    {
                        const Vec2& nrm = region_.normals[e];
                        const double w = sink.inequality(nrm.dot(rq + chain.positions[i] - region_.vertices[e]));
                        g_p[i] += w * nrm;
                        g_yaw(i) += w * nrm.dot(drq);
                    }
                }
            }
            if (!g_pos)
                return;
            Vec2 acc = Vec2::Zero();
            for (int i = nv - 1; i >= 1; i--)
            {
                acc += g_p[i];
                const double L = params_.hitch_lengths[i - 1];
                g_yaw(i) += L * (std::sin(yaws[i]) * acc.x() - std::cos(yaws[i]) * acc.y());
            }
            *g_pos += acc + g_p[0];
        }

        RobotParams params_;
        RobotState start_;
        const Sdf& sdf_;
        TargetRegion region_;
        SolverConfig cfg_;
        DecisionLayout layout_;
        Eigen::VectorXd theta_rate0_;
        std::vector<std::pair<int, int>> pairs_;

        MincoSystem minco_xy_, minco_s_, minco_th_;
        FlatTrajectory current_;
        Eigen::MatrixXd gc_xy_, gc_s_, gc_th_;
        Eigen::VectorXd th_, thd_, thdd_, g_th_, g_thd_;
        Eigen::VectorXd yaw_, vel_, delta_, g_vel_, g_delta_;
        std::vector<Vec2> centers_, positions_, g_centers_;
    };

    inline int choosePieces(double length, const SolverConfig& cfg)
    {
        if (cfg.pieces > 0)
            return cfg.pieces;
        const int m = static_cast<int>(std::lround(length / cfg.piece_length));
        return std::clamp(m, cfg.min_pieces, cfg.max_pieces);
    }

    /// Maps a front-end path to a decision vector: equal-arc waypoints, equal
    /// segment lengths, trailer yaws at equal-time stations under a constant
    /// speed assumption, and the path terminus as end state.
    inline DecisionVector initialGuess(const SearchPath& path, int m, int omega, const RobotParams& params,
                                       double speed_ratio = 0.6)
    {
        if (path.samples.size() < 2)
            throw PlanningError(ErrorCode::PathTooShort, "path needs at least two states");
        const int n = params.n_trailers;
        const std::vector<double> arc = path.arcLengths();
        const double length = arc.back();
        if (!(length > 0.0))
            throw PlanningError(ErrorCode::PathTooShort, "path has zero length");

        // unwrapped yaw chains along the path
        std::vector<std::vector<double>> yaws(path.samples.size(), std::vector<double>(n + 1));
        for (std::size_t k = 0; k < path.samples.size(); k++)
        {
            const PathSample& ps = path.samples[k];
            yaws[k][0] = k == 0 ? ps.theta0 : yaws[k - 1][0] + wrapAngle(ps.theta0 - yaws[k - 1][0]);
            for (int i = 1; i <= n; i++)
                yaws[k][i] = yaws[k][i - 1] - wrapAngle(yaws[k][i - 1] - ps.thetas[i - 1]);
        }
        auto at = [&](double q, Vec2& p, std::vector<double>& y) {
            auto it = std::upper_bound(arc.begin(), arc.end(), q);
            std::size_t k = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - arc.begin(), 1), arc.size() - 1);
            const double span = arc[k] - arc[k - 1];
            const double w = span > 0.0 ? std::clamp((q - arc[k - 1]) / span, 0.0, 1.0) : 1.0;
            p = (1.0 - w) * path.samples[k - 1].p + w * path.samples[k].p;
            y.resize(n + 1);
            for (int i = 0; i <= n; i++)
                y[i] = (1.0 - w) * yaws[k - 1][i] + w * yaws[k][i];
        };

        DecisionVector d;
        d.P.resize(2, m - 1);
        d.S = Eigen::VectorXd::Constant(m, length / m);
        Vec2 p;
        std::vector<double> y;
        for (int j = 1; j < m; j++)
        {
            at(length * j / m, p, y);
            d.P.col(j - 1) = p;
        }
        d.Theta.resize(n, omega - 1);
        for (int k = 1; k < omega; k++)
        {
            at(length * k / omega, p, y);
            for (int i = 0; i < n; i++)
                d.Theta(i, k - 1) = y[i + 1];
        }
        const std::vector<double>& ye = yaws.back();
        d.end_position = path.samples.back().p;
        d.end_yaw = ye[0];
        d.end_offsets.resize(n);
        const double bound = 0.95 * params.limits.dtheta_max;
        for (int i = 0; i < n; i++)
            d.end_offsets(i) = std::clamp(ye[i] - ye[i + 1], -bound, bound);
        d.duration = length / (speed_ratio * params.limits.v_max);
        return d;
    }
}
