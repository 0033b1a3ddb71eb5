#pragma once

#include "trailerplan/common.hpp"

#include <array>
#include <limits>
#include <optional>

namespace trailerplan
{
    struct Pose2
    {
        double x = 0.0;
        double y = 0.0;
        double yaw = 0.0;

        Vec2 position() const { return {x, y}; }
    };

    enum class DubinsWord
    {
        LSL,
        RSR,
        LSR,
        RSL,
        RLR,
        LRL,
    };

    inline const char* toString(DubinsWord w)
    {
        switch (w)
        {
            case DubinsWord::LSL: return "LSL";
            case DubinsWord::RSR: return "RSR";
            case DubinsWord::LSR: return "LSR";
            case DubinsWord::RSL: return "RSL";
            case DubinsWord::RLR: return "RLR";
            case DubinsWord::LRL: return "LRL";
        }
        return "?";
    }

    /// Shortest forward path of bounded curvature. Segment lengths are in
    /// metres; segment kinds are +1 (left), 0 (straight), -1 (right).
    struct DubinsPath
    {
        Pose2 start;
        double radius = 1.0;
        DubinsWord word = DubinsWord::LSL;
        std::array<double, 3> segments{};

        double length() const { return segments[0] + segments[1] + segments[2]; }

        std::array<int, 3> kinds() const
        {
            switch (word)
            {
                case DubinsWord::LSL: return {1, 0, 1};
                case DubinsWord::RSR: return {-1, 0, -1};
                case DubinsWord::LSR: return {1, 0, -1};
                case DubinsWord::RSL: return {-1, 0, 1};
                case DubinsWord::RLR: return {-1, 1, -1};
                case DubinsWord::LRL: return {1, -1, 1};
            }
            return {0, 0, 0};
        }

        /// Pose after travelling arc length s (clamped to [0, length]) and the
        /// signed curvature in force there.
        Pose2 sample(double s, double* curvature = nullptr) const
        {
            s = std::clamp(s, 0.0, length());
            Pose2 p = start;
            const auto k = kinds();
            for (int i = 0; i < 3; i++)
            {
                const double l = std::min(s, segments[i]);
                p = advance(p, k[i] / radius, l);
                if (curvature)
                    *curvature = k[i] / radius;
                s -= l;
                if (s <= 0.0 && i < 2 && l < segments[i])
                    break;
            }
            return p;
        }

        static Pose2 advance(const Pose2& p, double kappa, double l)
        {
            Pose2 q;
            if (std::abs(kappa) < 1e-12)
            {
                q.x = p.x + l * std::cos(p.yaw);
                q.y = p.y + l * std::sin(p.yaw);
                q.yaw = p.yaw;
                return q;
            }
            q.yaw = p.yaw + kappa * l;
            q.x = p.x + (std::sin(q.yaw) - std::sin(p.yaw)) / kappa;
            q.y = p.y - (std::cos(q.yaw) - std::cos(p.yaw)) / kappa;
            return q;
        }
    };

    namespace detail
    {
        inline double mod2pi(double a)
        {
            a = std::fmod(a, 2.0 * kPi);
            return a < 0.0 ? a + 2.0 * kPi : a;
        }

        // normalized segment lengths (t, p, q) of one word, or nothing
        inline std::optional<std::array<double, 3>> dubinsWord(DubinsWord w, double a, double b, double d)
        {
            const double sa = std::sin(a), sb = std::sin(b), ca = std::cos(a), cb = std::cos(b);
            const double cab = std::cos(a - b);
            switch (w)
            {
                case DubinsWord::LSL:
                {
                    const double p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb);
                    if (p2 < 0.0)
                        return std::nullopt;
                    const double tmp = std::atan2(cb - ca, d + sa - sb);
                    return std::array<double, 3>{mod2pi(-a + tmp), std::sqrt(p2), mod2pi(b - tmp)};
                }
                case DubinsWord::RSR:
                {
                    const double p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa);
                    if (p2 < 0.0)
                        return std::nullopt;
                    const double tmp = std::atan2(ca - cb, d - sa + sb);
                    return std::array<double, 3>{mod2pi(a - tmp), std::sqrt(p2), mod2pi(-b + tmp)};
                }
                case DubinsWord::LSR:
                {
                    const double p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb);
                    if (p2 < 0.0)
                        return std::nullopt;
                    const double p = std::sqrt(p2);
                    const double tmp = std::atan2(-ca - cb, d + sa + sb) - std::atan2(-2.0, p);
                    return std::array<double, 3>{mod2pi(-a + tmp), p, mod2pi(-mod2pi(b) + tmp)};
                }
                case DubinsWord::RSL:
                {
                    const double p2 = d * d - 2.0 + 2.0 * cab - 2.0 * d * (sa + sb);
                    if (p2 < 0.0)
                        return std::nullopt;
                    const double p = std::sqrt(p2);
                    const double tmp = std::atan2(ca + cb, d - sa - sb) - std::atan2(2.0, p);
                    return std::array<double, 3>{mod2pi(a - tmp), p, mod2pi(b - tmp)};
                }
                case DubinsWord::RLR:
                {
                    const double c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
                    if (std::abs(c) > 1.0)
                        return std::nullopt;
                    const double p = mod2pi(2.0 * kPi - std::acos(c));
                    const double t = mod2pi(a - std::atan2(ca - cb, d - sa + sb) + p / 2.0);
                    return std::array<double, 3>{t, p, mod2pi(a - b - t + p)};
                }
                case DubinsWord::LRL:
                {
                    const double c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
                    if (std::abs(c) > 1.0)
                        return std::nullopt;
                    const double p = mod2pi(2.0 * kPi - std::acos(c));
                    const double t = mod2pi(-a - std::atan2(ca - cb, d + sa - sb) + p / 2.0);
                    return std::array<double, 3>{t, p, mod2pi(b - a - t + p)};
                }
            }
            return std::nullopt;
        }
    }

    /// Length of one word type, if it exists, between two poses.
    inline std::optional<DubinsPath> dubinsWordPath(const Pose2& from, const Pose2& to, double radius, DubinsWord w)
    {
        const double dx = to.x - from.x, dy = to.y - from.y;
        const double d = std::hypot(dx, dy) / radius;
        const double phi = d > 0.0 ? std::atan2(dy, dx) : 0.0;
        const double a = detail::mod2pi(from.yaw - phi);
        const double b = detail::mod2pi(to.yaw - phi);
        const auto seg = detail::dubinsWord(w, a, b, d);
        if (!seg)
            return std::nullopt;
        DubinsPath path;
        path.start = from;
        path.radius = radius;
        path.word = w;
        for (int i = 0; i < 3; i++)
            path.segments[i] = (*seg)[i] * radius;
        return path;
    }

    /// Shortest of the six word types. Always exists for r_min > 0.
    inline DubinsPath dubinsConnect(const Pose2& from, const Pose2& to, double radius)
    {
        if (!(radius > 0.0))
            throw PlanningError(ErrorCode::InvalidConfig, "Dubins radius must be positive");
        if ((to.position() - from.position()).norm() < 1e-12 && std::abs(wrapAngle(to.yaw - from.yaw)) < 1e-12)
        {
            DubinsPath zero;
            zero.start = from;
            zero.radius = radius;
            zero.word = DubinsWord::LSL;
            return zero;
        }
        std::optional<DubinsPath> best;
        for (DubinsWord w : {DubinsWord::LSL, DubinsWord::RSR, DubinsWord::LSR, DubinsWord::RSL, DubinsWord::RLR,
                             DubinsWord::LRL})
        {
            auto p = dubinsWordPath(from, to, radius, w);
            if (p && (!best || p->length() < best->length()))
                best = p;
        }
        return *best;
    }
}
