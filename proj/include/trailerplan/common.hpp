#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace trailerplan
{
    using Vec2 = Eigen::Vector2d;

    enum class ErrorCode
    {
        DegenerateTangent,
        JackknifeDetected,
        EmptyBounds,
        NotConvex,
        DegeneratePolygon,
        SingularSystem,
        OutOfDomain,
        NoPath,
        NonPositiveInput,
        NonFiniteObjective,
        MaxOuterIterations,
        InnerSolveFailure,
        PathTooShort,
        GenerationFailed,
        InvalidConfig,
        ParseError,
    };

    inline const char* toString(ErrorCode code)
    {
        switch (code)
        {
            case ErrorCode::DegenerateTangent: return "DegenerateTangent";
            case ErrorCode::JackknifeDetected: return "JackknifeDetected";
            case ErrorCode::EmptyBounds: return "EmptyBounds";
            case ErrorCode::NotConvex: return "NotConvex";
            case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
            case ErrorCode::SingularSystem: return "SingularSystem";
            case ErrorCode::OutOfDomain: return "OutOfDomain";
            case ErrorCode::NoPath: return "NoPath";
            case ErrorCode::NonPositiveInput: return "NonPositiveInput";
            case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
            case ErrorCode::MaxOuterIterations: return "MaxOuterIterations";
            case ErrorCode::InnerSolveFailure: return "InnerSolveFailure";
            case ErrorCode::PathTooShort: return "PathTooShort";
            case ErrorCode::GenerationFailed: return "GenerationFailed";
            case ErrorCode::InvalidConfig: return "InvalidConfig";
            case ErrorCode::ParseError: return "ParseError";
        }
        return "Unknown";
    }

    /// Every failure raised by the library carries one of the codes above.
    class PlanningError : public std::runtime_error
    {
    public:
        PlanningError(ErrorCode code, const std::string& what)
            : std::runtime_error(std::string(toString(code)) + ": " + what), code_(code) {}

        ErrorCode code() const noexcept { return code_; }

    private:
        ErrorCode code_;
    };

    inline constexpr double kPi = std::numbers::pi;
    inline constexpr double kInf = std::numeric_limits<double>::infinity();

    /// Wraps an angle to (-pi, pi].
    inline double wrapAngle(double a)
    {
        a = std::fmod(a + kPi, 2.0 * kPi);
        if (a <= 0.0)
            a += 2.0 * kPi;
        return a - kPi;
    }

    inline Vec2 heading(double yaw) { return {std::cos(yaw), std::sin(yaw)}; }

    inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

    // natural basis gamma(t) = [1, t, ..., t^5] and its derivatives
    inline Eigen::Matrix<double, 6, 1> basis(double t, int order)
    {
        Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
        for (int k = order; k < 6; k++)
        {
            double coef = 1.0;
            for (int m = 0; m < order; m++)
                coef *= static_cast<double>(k - m);
            b(k) = coef * std::pow(t, k - order);
        }
        return b;
    }
}
