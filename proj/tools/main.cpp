#include "trailerplan/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace trailerplan;

namespace
{
    // exit codes
    constexpr int kOk = 0;
    constexpr int kFailed = 1;   // plan or validation did not pass
    constexpr int kBadInput = 2;

    struct Common
    {
        std::string robot_file, search_file, solver_file;
        int n_trailers = -1;
    };

    RobotParams loadRobot(const Common& c, int fallback)
    {
        Json j = c.robot_file.empty() ? Json::object() : readJsonFile(c.robot_file);
        if (c.n_trailers >= 0)
            j["n_trailers"] = c.n_trailers;
        return robotFromJson(j, fallback);
    }

    PlanConfig loadPlanConfig(const Common& c)
    {
        PlanConfig cfg;
        if (!c.search_file.empty())
            applySearchConfig(readJsonFile(c.search_file), cfg.search);
        if (!c.solver_file.empty())
            applySolverConfig(readJsonFile(c.solver_file), cfg.solver);
        return cfg;
    }

    fs::path prepareDir(const std::string& dir)
    {
        fs::path p(dir);
        fs::create_directories(p);
        return p;
    }

    int cmdPlan(const std::string& scenario_file, const Common& c, const std::string& out_dir, double dt)
    {
        const Json sj = readJsonFile(scenario_file);
        const RobotParams params = loadRobot(c, 1);
        PlanConfig cfg = loadPlanConfig(c);
        if (dt > 0.0)
            cfg.dump_dt = dt;
        const Scenario sc = loadScenario(sj, params);
        const PlanOutcome out = runPlan(sc, params, cfg);
        const RunReport& rep = out.report;

        const fs::path dir = prepareDir(out_dir);
        Json report = toJson(rep);
        report["scenario"] = scenario_file;
        report["n_trailers"] = params.n_trailers;
        writeTextFile((dir / "report.json").string(), report.dump(2) + "\n");
        writeTextFile((dir / "scenario.json").string(), toJson(sc).dump(2) + "\n");
        if (out.path)
            writeTextFile((dir / "path.txt").string(), pathToText(*out.path, params.n_trailers));
        if (out.solution)
            writeTextFile((dir / "trajectory.json").string(),
                          trajectoryToJson(out.solution->trajectory, out.solution->decision, params, sc,
                                           out.solution->stamps, cfg.dump_dt)
                                  .dump() +
                              "\n");

        if (rep.success)
            std::printf("success  l_traj %.3f m  t_d %.3f s  mean|kappa| %.4f 1/m  front-end %.1f ms  opt %.1f ms\n",
                        rep.l_traj, rep.t_d, rep.mean_kappa, rep.frontend_ms, rep.opt_ms);
        else
            std::printf("failed at %s: %s\n", rep.stage.c_str(), rep.reason.c_str());
        return rep.success ? kOk : kFailed;
    }

    int cmdBench(const std::string& matrix_file, const std::string& out_dir, int trials, bool quiet)
    {
        BenchMatrix m = benchMatrixFromJson(readJsonFile(matrix_file));
        if (trials > 0)
            m.trials = trials;
        const auto rows = runBench(m, [&](const BenchRow& r) {
            if (quiet)
                return;
            const RunReport& p = r.report;
            std::fprintf(stderr, "N=%d trial %d seed %llu: %s %s\n", r.n_trailers, r.trial,
                         static_cast<unsigned long long>(r.seed), p.success ? "ok" : "fail",
                         p.success ? "" : (p.stage + " " + p.reason).c_str());
        });
        const auto cells = aggregate(rows);
        const fs::path dir = prepareDir(out_dir);
        writeTextFile((dir / "bench.csv").string(), benchCsv(rows));
        writeTextFile((dir / "summary.csv").string(), aggregateCsv(cells));

        std::printf("%3s %-12s %-9s %6s %7s %7s %14s %12s %14s %10s %10s\n", "N", "counts", "band", "trials",
                    "fe", "succ", "l_traj", "t_d", "kappa", "opt_med", "opt_max");
        for (const CellStats& s : cells)
        {
            char counts[32], band[32];
            std::snprintf(counts, sizeof counts, "%d,%d,%d", s.counts[0], s.counts[1], s.counts[2]);
            std::snprintf(band, sizeof band, "%g-%g", s.band.first, s.band.second);
            std::printf("%3d %-12s %-9s %6d %6.1f%% %6.1f%% %6.2f+-%-6.2f %5.2f+-%-5.2f %6.4f+-%-6.4f %8.1fms %8.1fms\n",
                        s.n_trailers, counts, band, s.trials, 100.0 * s.frontendRate(), 100.0 * s.successRate(),
                        s.l_traj_mean, s.l_traj_std, s.t_d_mean, s.t_d_std, s.kappa_mean, s.kappa_std,
                        s.opt_ms_median, s.opt_ms_max);
        }
        return kOk;
    }

    int cmdSdfDump(const std::string& scenario_file, const Common& c, const std::string& out_file)
    {
        const RobotParams params = loadRobot(c, 1);
        const Scenario sc = loadScenario(readJsonFile(scenario_file), params);
        const std::string text = sdfToText(scenarioSdf(sc));
        if (out_file.empty() || out_file == "-")
            std::cout << text;
        else
            writeTextFile(out_file, text);
        return kOk;
    }

    int cmdValidate(const std::string& trajectory_file)
    {
        const LoadedTrajectory lt = trajectoryFromJson(readJsonFile(trajectory_file));
        const Sdf sdf = scenarioSdf(lt.scenario);
        const TargetRegion region = makeTarget(lt.scenario.target);
        const RobotState start = scenarioStart(lt.scenario, lt.params);
        const FeasibilityReport rep = checkFeasibility(lt.trajectory, lt.params, sdf, region, start, lt.stamps);
        std::cout << toJson(rep).dump(2) << "\n";
        return rep.ok() ? kOk : kFailed;
    }
}

int main(int argc, char** argv)
{
    CLI::App app{"Trajectory planner for tractor-trailer robots"};
    app.require_subcommand(1);

    Common common;
    auto addCommon = [&](CLI::App* sub, bool planning) {
        sub->add_option("--robot", common.robot_file, "robot JSON (overrides the benchmark robot)")
            ->check(CLI::ExistingFile);
        sub->add_option("-n,--trailers", common.n_trailers, "number of trailers")->check(CLI::NonNegativeNumber);
        if (planning)
        {
            sub->add_option("--search", common.search_file, "front-end config JSON")->check(CLI::ExistingFile);
            sub->add_option("--solver", common.solver_file, "optimizer config JSON")->check(CLI::ExistingFile);
        }
    };

    std::string input, out_dir = "out", out_file;
    double dt = 0.0;
    int trials = 0;
    bool quiet = false;

    CLI::App* plan = app.add_subcommand("plan", "plan one scenario and write trajectory, path and report");
    plan->add_option("scenario", input, "scenario JSON")->required()->check(CLI::ExistingFile);
    plan->add_option("-o,--out", out_dir, "output directory");
    plan->add_option("--dt", dt, "trajectory dump period in s");
    addCommon(plan, true);

    CLI::App* bench = app.add_subcommand("bench", "run a benchmark matrix");
    bench->add_option("matrix", input, "matrix JSON")->required()->check(CLI::ExistingFile);
    bench->add_option("-o,--out", out_dir, "output directory");
    bench->add_option("--trials", trials, "override trials per cell");
    bench->add_flag("-q,--quiet", quiet, "no per-trial progress");

    CLI::App* sdf = app.add_subcommand("sdf-dump", "write the signed distance raster of a scenario");
    sdf->add_option("scenario", input, "scenario JSON")->required()->check(CLI::ExistingFile);
    sdf->add_option("-o,--out", out_file, "output file, '-' for stdout");
    addCommon(sdf, false);

    CLI::App* validate = app.add_subcommand("validate", "re-check a trajectory dump");
    validate->add_option("trajectory", input, "trajectory JSON")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (plan->parsed())
            return cmdPlan(input, common, out_dir, dt);
        if (bench->parsed())
            return cmdBench(input, out_dir, trials, quiet);
        if (sdf->parsed())
            return cmdSdfDump(input, common, out_file);
        if (validate->parsed())
            return cmdValidate(input);
    }
    catch (const PlanningError& e)
    {
        std::fprintf(stderr, "error (%s): %s\n", toString(e.code()), e.what());
        return kBadInput;
    }
    catch (const std::exception& e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kBadInput;
    }
    return kBadInput;
}
