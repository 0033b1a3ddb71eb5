#pragma once

#include "trailerplan/io.hpp"
#include "trailerplan/planner.hpp"

#include <map>
#include <optional>

namespace trailerplan
{
    struct PlanConfig
    {
        SearchConfig search;
        SolverConfig solver;
        FeasibilityTolerances feasibility;
        double dump_dt = 0.05;
    };

    /// Outcome of one plan. Metrics are meaningful only when success is set.
    struct RunReport
    {
        bool success = false;
        std::string stage;    // "", "front-end", "optimization" or "validation"
        std::string reason;
        bool frontend_ok = false;
        double frontend_ms = 0.0;
        double opt_ms = 0.0;
        int pieces = 0;
        double l_traj = 0.0;
        double t_d = 0.0;
        double mean_kappa = 0.0;
        std::optional<FeasibilityReport> feasibility;
        std::optional<AlmResult> alm;
    };

    struct PlanOutcome
    {
        RunReport report;
        Sdf sdf;
        TargetRegion region;
        RobotState start;
        std::optional<SearchPath> path;
        std::optional<TrajectorySolution> solution;
    };

    inline Sdf scenarioSdf(const Scenario& sc) { return buildSdf(rasterize(sc.obstacles, sc.resolution)); }

    /// Trailer yaws missing from the scenario start are taken as aligned.
    inline RobotState scenarioStart(const Scenario& sc, const RobotParams& params)
    {
        RobotState s = sc.start;
        s.thetas.resize(params.n_trailers, s.theta0);
        return s;
    }

    /// rasterize -> SDF -> search -> initial guess -> ALM -> dense validation.
    /// Stage failures land in the report; only invalid inputs throw.
    inline PlanOutcome runPlan(const Scenario& sc, const RobotParams& params, const PlanConfig& cfg)
    {
        using Clock = std::chrono::steady_clock;
        PlanOutcome out;
        RunReport& rep = out.report;
        out.sdf = scenarioSdf(sc);
        out.region = makeTarget(sc.target);
        out.start = scenarioStart(sc, params);

        const auto t0 = Clock::now();
        try
        {
            SearchResult sr = search(out.sdf, out.start, out.region, params, cfg.search);
            out.path = std::move(sr.path);
            rep.frontend_ok = true;
        }
        catch (const PlanningError& e)
        {
            if (e.code() != ErrorCode::NoPath)
                throw;
            rep.stage = "front-end";
            rep.reason = e.what();
        }
        rep.frontend_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        if (!rep.frontend_ok)
            return out;

        const auto t1 = Clock::now();
        try
        {
            out.solution = solveTrajectory(params, out.start, out.sdf, out.region, *out.path, cfg.solver);
        }
        catch (const PlanningError& e)
        {
            rep.stage = "optimization";
            rep.reason = e.what();
        }
        rep.opt_ms = std::chrono::duration<double, std::milli>(Clock::now() - t1).count();
        if (!out.solution)
            return out;

        const TrajectorySolution& sol = *out.solution;
        rep.alm = sol.alm;
        rep.pieces = sol.pieces;
        if (!sol.success())
        {
            rep.stage = "optimization";
            rep.reason = toString(sol.alm.status);
            return out;
        }
        try
        {
            rep.feasibility = checkFeasibility(sol.trajectory, params, out.sdf, out.region, out.start,
                                               sol.stamps, cfg.feasibility);
        }
        catch (const PlanningError& e)
        {
            rep.stage = "validation";
            rep.reason = e.what();
            return out;
        }
        if (!rep.feasibility->ok())
        {
            rep.stage = "validation";
            rep.reason = rep.feasibility->failures.front();
            return out;
        }
        rep.success = true;
        rep.l_traj = rep.feasibility->length;
        rep.t_d = sol.decision.duration;
        rep.mean_kappa = rep.feasibility->mean_abs_kappa;
        return out;
    }

    inline Json toJson(const RunReport& r)
    {
        Json j = {{"success", r.success},
                  {"stage", r.stage},
                  {"reason", r.reason},
                  {"frontend_ok", r.frontend_ok},
                  {"frontend_ms", r.frontend_ms},
                  {"opt_ms", r.opt_ms},
                  {"pieces", r.pieces}};
        if (r.success)
            j["metrics"] = {{"l_traj", r.l_traj}, {"t_d", r.t_d}, {"mean_kappa", r.mean_kappa}};
        if (r.alm)
            j["solver"] = toJson(*r.alm);
        if (r.feasibility)
            j["feasibility"] = toJson(*r.feasibility);
        return j;
    }

    // benchmark

    struct BenchMatrix
    {
        std::vector<int> trailers{1, 2, 3};
        std::vector<std::array<int, 3>> complexities{{20, 20, 20}};
        std::vector<std::pair<double, double>> bands{{10.0, 20.0}};
        int trials = 30;
        std::uint64_t seed = 1;
        ScenarioSpec scenario;          // counts, band and seed are overwritten per trial
        Json robot = Json::object();    // overrides on top of the benchmark robot
        PlanConfig plan;
    };

    inline BenchMatrix benchMatrixFromJson(const Json& j)
    {
        BenchMatrix m;
        try
        {
            detail::readIf(j, "trailers", m.trailers);
            if (j.contains("complexities"))
                m.complexities = j.at("complexities").get<std::vector<std::array<int, 3>>>();
            if (j.contains("bands"))
                m.bands = j.at("bands").get<std::vector<std::pair<double, double>>>();
            detail::readIf(j, "trials", m.trials);
            detail::readIf(j, "seed", m.seed);
            if (j.contains("world"))
                m.scenario.world = detail::vec2(j.at("world"));
            detail::readIf(j, "target_length", m.scenario.target_length);
            detail::readIf(j, "target_width", m.scenario.target_width);
            if (j.contains("robot"))
                m.robot = j.at("robot");
            if (j.contains("search"))
                applySearchConfig(j.at("search"), m.plan.search);
            if (j.contains("solver"))
                applySolverConfig(j.at("solver"), m.plan.solver);
        }
        catch (const Json::exception& e)
        {
            throw PlanningError(ErrorCode::ParseError, std::string("matrix: ") + e.what());
        }
        if (m.trials < 1 || m.trailers.empty() || m.complexities.empty() || m.bands.empty())
            throw PlanningError(ErrorCode::InvalidConfig, "matrix needs trailers, complexities, bands and trials >= 1");
        return m;
    }

    struct BenchRow
    {
        int n_trailers = 0;
        std::array<int, 3> counts{};
        std::pair<double, double> band;
        int trial = 0;
        std::uint64_t seed = 0;
        RunReport report;
    };

    /// Seed of a trial depends on the cell and trial index, not on N, so every
    /// trailer count sees the same worlds.
    inline std::uint64_t trialSeed(std::uint64_t base, std::size_t complexity, std::size_t band, int trial)
    {
        return base * 1000003ULL + complexity * 100000ULL + band * 10000ULL + static_cast<std::uint64_t>(trial);
    }

    template <typename Progress>
    std::vector<BenchRow> runBench(const BenchMatrix& m, Progress&& progress)
    {
        std::vector<BenchRow> rows;
        for (int n : m.trailers)
        {
            Json rj = m.robot;
            rj["n_trailers"] = n;
            const RobotParams params = robotFromJson(rj, n);
            for (std::size_t c = 0; c < m.complexities.size(); c++)
                for (std::size_t b = 0; b < m.bands.size(); b++)
                    for (int t = 0; t < m.trials; t++)
                    {
                        ScenarioSpec spec = m.scenario;
                        spec.seed = trialSeed(m.seed, c, b, t);
                        spec.n_tri = m.complexities[c][0];
                        spec.n_quad = m.complexities[c][1];
                        spec.n_pent = m.complexities[c][2];
                        spec.band_min = m.bands[b].first;
                        spec.band_max = m.bands[b].second;
                        BenchRow row;
                        row.n_trailers = n;
                        row.counts = m.complexities[c];
                        row.band = m.bands[b];
                        row.trial = t;
                        row.seed = spec.seed;
                        try
                        {
                            const Scenario sc = genScenario(spec, params);
                            row.report = runPlan(sc, params, m.plan).report;
                        }
                        catch (const PlanningError& e)
                        {
                            row.report.stage = "generation";
                            row.report.reason = e.what();
                        }
                        progress(row);
                        rows.push_back(std::move(row));
                    }
        }
        return rows;
    }

    inline std::vector<BenchRow> runBench(const BenchMatrix& m)
    {
        return runBench(m, [](const BenchRow&) {});
    }

    inline std::string benchCsv(const std::vector<BenchRow>& rows)
    {
        std::ostringstream os;
        os << "n_trailers,n_tri,n_quad,n_pent,band_min,band_max,trial,seed,frontend_ok,success,stage,pieces,"
              "l_traj,t_d,mean_kappa,frontend_ms,opt_ms\n";
        for (const BenchRow& r : rows)
        {
            const RunReport& p = r.report;
            os << r.n_trailers << ',' << r.counts[0] << ',' << r.counts[1] << ',' << r.counts[2] << ','
               << detail::fmt(r.band.first) << ',' << detail::fmt(r.band.second) << ',' << r.trial << ',' << r.seed
               << ',' << p.frontend_ok << ',' << p.success << ',' << p.stage << ',' << p.pieces << ',';
            if (p.success)
                os << detail::fmt(p.l_traj) << ',' << detail::fmt(p.t_d) << ',' << detail::fmt(p.mean_kappa);
            else
                os << ",,";
            os << ',' << detail::fmt(p.frontend_ms) << ',' << detail::fmt(p.opt_ms) << '\n';
        }
        return os.str();
    }

    struct CellStats
    {
        int n_trailers = 0;
        std::array<int, 3> counts{};
        std::pair<double, double> band;
        int trials = 0;
        int frontend_ok = 0;
        int success = 0;
        double frontend_ms_mean = 0.0, opt_ms_mean = 0.0, opt_ms_median = 0.0, opt_ms_max = 0.0;
        double l_traj_mean = 0.0, l_traj_std = 0.0;
        double t_d_mean = 0.0, t_d_std = 0.0;
        double kappa_mean = 0.0, kappa_std = 0.0;

        double frontendRate() const { return trials ? static_cast<double>(frontend_ok) / trials : 0.0; }
        double successRate() const { return trials ? static_cast<double>(success) / trials : 0.0; }
    };

    namespace detail
    {
        inline std::pair<double, double> meanStd(const std::vector<double>& v)
        {
            if (v.empty())
                return {0.0, 0.0};
            double m = 0.0;
            for (double x : v)
                m += x;
            m /= v.size();
            double s = 0.0;
            for (double x : v)
                s += (x - m) * (x - m);
            return {m, v.size() > 1 ? std::sqrt(s / (v.size() - 1)) : 0.0};
        }

        inline double median(std::vector<double> v)
        {
            if (v.empty())
                return 0.0;
            std::sort(v.begin(), v.end());
            const std::size_t h = v.size() / 2;
            return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
        }
    }

    /// Per-cell aggregates. Optimization times cover every plan that reached
    /// the optimizer; path metrics cover successes only.
    inline std::vector<CellStats> aggregate(const std::vector<BenchRow>& rows)
    {
        std::map<std::tuple<int, std::array<int, 3>, std::pair<double, double>>, std::vector<const BenchRow*>> cells;
        for (const BenchRow& r : rows)
            cells[{r.n_trailers, r.counts, r.band}].push_back(&r);
        std::vector<CellStats> out;
        for (const auto& [key, members] : cells)
        {
            CellStats c;
            std::tie(c.n_trailers, c.counts, c.band) = key;
            std::vector<double> fe, opt, len, td, kap;
            for (const BenchRow* r : members)
            {
                const RunReport& p = r->report;
                c.trials++;
                c.frontend_ok += p.frontend_ok;
                c.success += p.success;
                fe.push_back(p.frontend_ms);
                if (p.frontend_ok)
                    opt.push_back(p.opt_ms);
                if (p.success)
                {
                    len.push_back(p.l_traj);
                    td.push_back(p.t_d);
                    kap.push_back(p.mean_kappa);
                }
            }
            c.frontend_ms_mean = detail::meanStd(fe).first;
            c.opt_ms_mean = detail::meanStd(opt).first;
            c.opt_ms_median = detail::median(opt);
            c.opt_ms_max = opt.empty() ? 0.0 : *std::max_element(opt.begin(), opt.end());
            std::tie(c.l_traj_mean, c.l_traj_std) = detail::meanStd(len);
            std::tie(c.t_d_mean, c.t_d_std) = detail::meanStd(td);
            std::tie(c.kappa_mean, c.kappa_std) = detail::meanStd(kap);
            out.push_back(c);
        }
        return out;
    }

    inline std::string aggregateCsv(const std::vector<CellStats>& cells)
    {
        std::ostringstream os;
        os << "n_trailers,n_tri,n_quad,n_pent,band_min,band_max,trials,frontend_rate,success_rate,"
              "l_traj_mean,l_traj_std,t_d_mean,t_d_std,kappa_mean,kappa_std,frontend_ms_mean,opt_ms_mean,"
              "opt_ms_median,opt_ms_max\n";
        for (const CellStats& c : cells)
            os << c.n_trailers << ',' << c.counts[0] << ',' << c.counts[1] << ',' << c.counts[2] << ','
               << detail::fmt(c.band.first) << ',' << detail::fmt(c.band.second) << ',' << c.trials << ','
               << detail::fmt(c.frontendRate()) << ',' << detail::fmt(c.successRate()) << ','
               << detail::fmt(c.l_traj_mean) << ',' << detail::fmt(c.l_traj_std) << ',' << detail::fmt(c.t_d_mean)
               << ',' << detail::fmt(c.t_d_std) << ',' << detail::fmt(c.kappa_mean) << ','
               << detail::fmt(c.kappa_std) << ',' << detail::fmt(c.frontend_ms_mean) << ','
               << detail::fmt(c.opt_ms_mean) << ',' << detail::fmt(c.opt_ms_median) << ','
               << detail::fmt(c.opt_ms_max) << '\n';
        return os.str();
    }
}
