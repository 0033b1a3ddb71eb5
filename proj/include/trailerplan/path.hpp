#pragma once

#include "trailerplan/common.hpp"

#include <vector>

namespace trailerplan
{
    struct PathSample
    {
        double t = 0.0;
        Vec2 p = Vec2::Zero();
        double theta0 = 0.0;
        double v0 = 0.0;
        double steer = 0.0;
        std::vector<double> thetas;
    };

    /// Front-end result: time-stamped tractor SE(2) states with the controls
    /// that reach them (sample k stores the control applied on [t_{k-1}, t_k])
    /// and the integrated trailer yaws.
    struct SearchPath
    {
        std::vector<PathSample> samples;
        double length = 0.0;
        double score = 0.0;
        int terminal = -1;

        /// Cumulative planar arc length at each sample.
        std::vector<double> arcLengths() const
        {
            std::vector<double> s(samples.size(), 0.0);
            for (std::size_t k = 1; k < samples.size(); k++)
                s[k] = s[k - 1] + (samples[k].p - samples[k - 1].p).norm();
            return s;
        }
    };
}
