#pragma once

#include "trailerplan/common.hpp"

namespace trailerplan
{
    /// C2 bijection (0, inf) -> R with lc2(1) = 0.
    inline double lc2(double x)
    {
        if (!(x > 0.0))
            throw PlanningError(ErrorCode::NonPositiveInput, "lc2 needs x > 0, got " + std::to_string(x));
        return x > 1.0 ? std::sqrt(2.0 * x - 1.0) - 1.0 : 1.0 - std::sqrt(2.0 / x - 1.0);
    }

    inline double lc2Derivative(double x)
    {
        if (!(x > 0.0))
            throw PlanningError(ErrorCode::NonPositiveInput, "lc2 needs x > 0, got " + std::to_string(x));
        return x > 1.0 ? 1.0 / std::sqrt(2.0 * x - 1.0) : 1.0 / (x * x * std::sqrt(2.0 / x - 1.0));
    }

    inline double lc2Inv(double y)
    {
        return y > 0.0 ? (0.5 * y + 1.0) * y + 1.0 : 1.0 / ((0.5 * y - 1.0) * y + 1.0);
    }

    inline double lc2InvDerivative(double y)
    {
        if (y > 0.0)
            return y + 1.0;
        const double d = (1.0 - y) * (1.0 - y) + 1.0;
        return 4.0 * (1.0 - y) / (d * d);
    }

    /// Inter-vehicle offset theta_d in (-bound, bound) from its unconstrained
    /// image, and back.
    inline double offsetFromImage(double image, double bound)
    {
        const double s = lc2Inv(image);
        return bound * (s - 1.0) / (s + 1.0);
    }

    inline double offsetFromImageDerivative(double image, double bound)
    {
        const double s = lc2Inv(image);
        return 2.0 * bound / ((s + 1.0) * (s + 1.0)) * lc2InvDerivative(image);
    }

    inline double offsetToImage(double offset, double bound)
    {
        if (!(std::abs(offset) < bound))
            throw PlanningError(ErrorCode::NonPositiveInput, "offset " + std::to_string(offset) + " outside the open bound");
        return lc2((bound + offset) / (bound - offset));
    }
}
