#pragma once

#include "trailerplan/common.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

namespace trailerplan
{
    using Polygon = std::vector<Vec2>;

    struct ObstacleSet
    {
        Vec2 bounds_min = Vec2::Zero();
        Vec2 bounds_max = Vec2::Zero();
        std::vector<Polygon> polygons;
    };

    /// Point-in-polygon by crossing number; points on the boundary count as inside.
    inline bool pointInPolygon(const Polygon& poly, const Vec2& p)
    {
        const std::size_t n = poly.size();
        if (n < 3)
            return false;
        bool inside = false;
        for (std::size_t i = 0, j = n - 1; i < n; j = i++)
        {
            const Vec2& a = poly[i];
            const Vec2& b = poly[j];
            const Vec2 ab = b - a;
            const Vec2 ap = p - a;
            // on segment
            if (std::abs(cross(ab, ap)) <= 1e-12 * std::max(1.0, ab.squaredNorm()) &&
                ap.dot(ab) >= 0.0 && ap.dot(ab) <= ab.squaredNorm())
                return true;
            if ((a.y() > p.y()) != (b.y() > p.y()))
            {
                const double x_cross = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
                if (p.x() < x_cross)
                    inside = !inside;
            }
        }
        return inside;
    }

    /// Cells are indexed (ix, iy) with row-major storage, iy * width + ix.
    /// Cell (ix, iy) has its center at origin + resolution * (ix + 0.5, iy + 0.5).
    struct GridGeometry
    {
        Vec2 origin = Vec2::Zero();
        double resolution = 0.1;
        int width = 0;
        int height = 0;

        std::size_t cells() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
        std::size_t index(int ix, int iy) const
        {
            return static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) + static_cast<std::size_t>(ix);
        }
        Vec2 cellCenter(int ix, int iy) const
        {
            return origin + resolution * Vec2(ix + 0.5, iy + 0.5);
        }
        Vec2 extent() const { return resolution * Vec2(width, height); }
        bool inMap(const Vec2& p) const
        {
            const Vec2 e = extent();
            return p.x() >= origin.x() && p.y() >= origin.y() &&
                   p.x() <= origin.x() + e.x() && p.y() <= origin.y() + e.y();
        }
        bool cellOf(const Vec2& p, int& ix, int& iy) const
        {
            ix = static_cast<int>(std::floor((p.x() - origin.x()) / resolution));
            iy = static_cast<int>(std::floor((p.y() - origin.y()) / resolution));
            return ix >= 0 && iy >= 0 && ix < width && iy < height;
        }
        double diagonal() const { return extent().norm(); }
    };

    struct OccupancyGrid
    {
        GridGeometry geometry;
        std::vector<std::uint8_t> occupied;

        bool at(int ix, int iy) const { return occupied[geometry.index(ix, iy)] != 0; }
    };

    inline OccupancyGrid rasterize(const ObstacleSet& obstacles, double resolution)
    {
        if (!(resolution > 0.0))
            throw PlanningError(ErrorCode::InvalidConfig, "resolution must be positive");
        const Vec2 size = obstacles.bounds_max - obstacles.bounds_min;
        if (!(size.x() > 0.0) || !(size.y() > 0.0))
            throw PlanningError(ErrorCode::EmptyBounds, "world bounds are degenerate");

        OccupancyGrid grid;
        grid.geometry.origin = obstacles.bounds_min;
        grid.geometry.resolution = resolution;
        grid.geometry.width = static_cast<int>(std::ceil(size.x() / resolution - 1e-9));
        grid.geometry.height = static_cast<int>(std::ceil(size.y() / resolution - 1e-9));
        grid.occupied.assign(grid.geometry.cells(), 0);

        const GridGeometry& g = grid.geometry;
        for (const Polygon& poly : obstacles.polygons)
        {
            if (poly.size() < 3)
                continue;
            Vec2 lo = poly.front(), hi = poly.front();
            for (const Vec2& v : poly)
            {
                lo = lo.cwiseMin(v);
                hi = hi.cwiseMax(v);
            }
            const int x0 = std::max(0, static_cast<int>(std::floor((lo.x() - g.origin.x()) / resolution - 0.5)));
            const int y0 = std::max(0, static_cast<int>(std::floor((lo.y() - g.origin.y()) / resolution - 0.5)));
            const int x1 = std::min(g.width - 1, static_cast<int>(std::ceil((hi.x() - g.origin.x()) / resolution - 0.5)));
            const int y1 = std::min(g.height - 1, static_cast<int>(std::ceil((hi.y() - g.origin.y()) / resolution - 0.5)));
            for (int iy = y0; iy <= y1; iy++)
                for (int ix = x0; ix <= x1; ix++)
                    if (pointInPolygon(poly, g.cellCenter(ix, iy)))
                        grid.occupied[g.index(ix, iy)] = 1;
        }
        return grid;
    }

    namespace detail
    {
        // Exact 1D squared distance transform (lower envelope of parabolas).
        // f[q] < 0 marks "no site"; output is the squared distance in cells, or
        // a negative value when the line holds no site.
        inline void distanceTransform1d(const double* f, double* d, int n, int* v, double* z)
        {
            int k = -1;
            for (int q = 0; q < n; q++)
            {
                if (f[q] < 0.0)
                    continue;
                if (k < 0)
                {
                    k = 0;
                    v[0] = q;
                    z[0] = -std::numeric_limits<double>::infinity();
                    z[1] = std::numeric_limits<double>::infinity();
                    continue;
                }
                auto intersect = [&](int r) {
                    return ((f[q] + double(q) * q) - (f[r] + double(r) * r)) / (2.0 * q - 2.0 * r);
                };
                double s = intersect(v[k]);
                // z[0] is -inf, so this never pops the first parabola
                while (s <= z[k])
                {
                    k--;
                    s = intersect(v[k]);
                }
                k++;
                v[k] = q;
                z[k] = s;
                z[k + 1] = std::numeric_limits<double>::infinity();
            }
            if (k < 0)
            {
                std::fill(d, d + n, -1.0);
                return;
            }
            int j = 0;
            for (int q = 0; q < n; q++)
            {
                while (z[j + 1] < q)
                    j++;
                const double dq = q - v[j];
                d[q] = dq * dq + f[v[j]];
            }
        }

        // Squared distance (cells^2) from every cell to the nearest cell whose
        // occupancy equals `site`; negative where no such cell exists.
        inline std::vector<double> squaredEdt(const GridGeometry& g, const std::vector<std::uint8_t>& occupied,
                                              bool site)
        {
            const int w = g.width, h = g.height;
            std::vector<double> out(g.cells());

            // rows: two sweeps for the nearest site on the same row
            for (int iy = 0; iy < h; iy++)
            {
                const std::uint8_t* in = occupied.data() + static_cast<std::size_t>(iy) * w;
                double* row = out.data() + static_cast<std::size_t>(iy) * w;
                int last = -1;
                for (int ix = 0; ix < w; ix++)
                {
                    if ((in[ix] != 0) == site)
                        last = ix;
                    row[ix] = last < 0 ? -1.0 : double(ix - last);
                }
                last = -1;
                for (int ix = w - 1; ix >= 0; ix--)
                {
                    if ((in[ix] != 0) == site)
                        last = ix;
                    if (last >= 0 && (row[ix] < 0.0 || last - ix < row[ix]))
                        row[ix] = last - ix;
                    if (row[ix] > 0.0)
                        row[ix] *= row[ix];
                }
            }

            // columns, gathered in bands so every row access reads whole cache lines
            constexpr int kBand = 8;
            std::vector<double> f(static_cast<std::size_t>(kBand) * h), d(h), z(h + 1);
            std::vector<int> v(h);
            for (int x0 = 0; x0 < w; x0 += kBand)
            {
                const int band = std::min(kBand, w - x0);
                for (int iy = 0; iy < h; iy++)
                    for (int b = 0; b < band; b++)
                        f[static_cast<std::size_t>(b) * h + iy] = out[g.index(x0 + b, iy)];
                for (int b = 0; b < band; b++)
                {
                    double* col = f.data() + static_cast<std::size_t>(b) * h;
                    distanceTransform1d(col, d.data(), h, v.data(), z.data());
                    std::copy(d.begin(), d.end(), col);
                }
                for (int iy = 0; iy < h; iy++)
                    for (int b = 0; b < band; b++)
                        out[g.index(x0 + b, iy)] = f[static_cast<std::size_t>(b) * h + iy];
            }
            return out;
        }
    }

    struct SdfSample
    {
        double value = 0.0;
        Vec2 gradient = Vec2::Zero();
    };

    /// Signed distance field on cell centers: positive in free cells (distance
    /// to the nearest occupied center), negative in occupied cells (minus the
    /// distance to the nearest free center). Values are clamped to the map
    /// diagonal, which is also what out-of-map queries return.
    class Sdf
    {
    public:
        Sdf() = default;
        Sdf(GridGeometry geometry, std::vector<double> values)
            : geometry_(geometry), values_(std::move(values)), ceiling_(geometry.diagonal()) {}

        const GridGeometry& geometry() const { return geometry_; }
        const std::vector<double>& values() const { return values_; }
        double ceiling() const { return ceiling_; }
        double at(int ix, int iy) const { return values_[geometry_.index(ix, iy)]; }

        /// Bilinear interpolation between the four surrounding cell centers,
        /// with the analytic gradient of that patch.
        SdfSample query(const Vec2& p) const
        {
            SdfSample out;
            if (!geometry_.inMap(p) || values_.empty())
            {
                out.value = ceiling_;
                return out;
            }
            const double res = geometry_.resolution;
            const double u = (p.x() - geometry_.origin.x()) / res - 0.5;
            const double v = (p.y() - geometry_.origin.y()) / res - 0.5;
            const int i0 = static_cast<int>(std::floor(u));
            const int j0 = static_cast<int>(std::floor(v));
            const double fx = u - i0;
            const double fy = v - j0;
            const int xa = std::clamp(i0, 0, geometry_.width - 1);
            const int xb = std::clamp(i0 + 1, 0, geometry_.width - 1);
            const int ya = std::clamp(j0, 0, geometry_.height - 1);
            const int yb = std::clamp(j0 + 1, 0, geometry_.height - 1);
            const double v00 = at(xa, ya), v10 = at(xb, ya);
            const double v01 = at(xa, yb), v11 = at(xb, yb);
            const double lo = (1.0 - fx) * v00 + fx * v10;
            const double hi = (1.0 - fx) * v01 + fx * v11;
            out.value = (1.0 - fy) * lo + fy * hi;
            out.gradient.x() = ((1.0 - fy) * (v10 - v00) + fy * (v11 - v01)) / res;
            out.gradient.y() = (hi - lo) / res;
            return out;
        }

    private:
        GridGeometry geometry_;
        std::vector<double> values_;
        double ceiling_ = 0.0;
    };

    /// Exact Euclidean signed distance transform in O(cells).
    inline Sdf buildSdf(const OccupancyGrid& grid)
    {
        const GridGeometry& g = grid.geometry;
        const std::vector<double> to_occ = detail::squaredEdt(g, grid.occupied, true);
        const std::vector<double> to_free = detail::squaredEdt(g, grid.occupied, false);
        const double ceiling = g.diagonal();
        std::vector<double> values(g.cells());
        for (std::size_t c = 0; c < g.cells(); c++)
        {
            if (grid.occupied[c])
                values[c] = to_free[c] < 0.0 ? -ceiling : -std::min(ceiling, g.resolution * std::sqrt(to_free[c]));
            else
                values[c] = to_occ[c] < 0.0 ? ceiling : std::min(ceiling, g.resolution * std::sqrt(to_occ[c]));
        }
        return Sdf(g, std::move(values));
    }

    /// Convex target polygon, vertices counter-clockwise; normals[k] is the
    /// outward unit normal of the edge vertices[k] -> vertices[k + 1].
    struct TargetRegion
    {
        std::vector<Vec2> vertices;
        std::vector<Vec2> normals;
        Vec2 center = Vec2::Zero();

        std::size_t edges() const { return vertices.size(); }

        bool contains(const Vec2& p, double tol = 0.0) const
        {
            for (std::size_t k = 0; k < edges(); k++)
                if (normals[k].dot(p - vertices[k]) > tol)
                    return false;
            return true;
        }

        /// Euclidean distance to the region, zero inside.
        double distance(const Vec2& p) const
        {
            if (contains(p))
                return 0.0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < edges(); k++)
            {
                const Vec2& a = vertices[k];
                const Vec2& b = vertices[(k + 1) % edges()];
                const Vec2 ab = b - a;
                const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
                best = std::min(best, (a + t * ab - p).norm());
            }
            return best;
        }
    };

    inline TargetRegion makeTarget(std::vector<Vec2> vertices)
    {
        const std::size_t n = vertices.size();
        if (n < 3)
            throw PlanningError(ErrorCode::DegeneratePolygon, "target region needs at least 3 vertices");
        double scale = 0.0;
        for (const Vec2& v : vertices)
        {
            if (!v.allFinite())
                throw PlanningError(ErrorCode::DegeneratePolygon, "non-finite vertex");
            scale = std::max(scale, v.cwiseAbs().maxCoeff());
        }
        const double eps = 1e-12 * std::max(1.0, scale * scale);
        for (std::size_t i = 0; i < n; i++)
            if ((vertices[(i + 1) % n] - vertices[i]).squaredNorm() <= eps)
                throw PlanningError(ErrorCode::DegeneratePolygon, "repeated vertex");

        double area2 = 0.0;
        for (std::size_t i = 0; i < n; i++)
            area2 += cross(vertices[i], vertices[(i + 1) % n]);
        if (std::abs(area2) <= eps)
            throw PlanningError(ErrorCode::DegeneratePolygon, "zero-area polygon");
        if (area2 < 0.0)
            std::reverse(vertices.begin(), vertices.end());

        double turning = 0.0;
        for (std::size_t i = 0; i < n; i++)
        {
            const Vec2 e0 = vertices[(i + 1) % n] - vertices[i];
            const Vec2 e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
            const double c = cross(e0, e1);
            if (std::abs(c) <= eps)
                throw PlanningError(ErrorCode::DegeneratePolygon, "collinear consecutive vertices");
            if (c < 0.0)
                throw PlanningError(ErrorCode::NotConvex, "reflex vertex");
            turning += std::atan2(c, e0.dot(e1));
        }
        if (std::abs(turning - 2.0 * kPi) > 1e-6)
            throw PlanningError(ErrorCode::NotConvex, "self-intersecting polygon");

        TargetRegion region;
        region.vertices = vertices;
        double a = 0.0;
        Vec2 c = Vec2::Zero();
        for (std::size_t i = 0; i < n; i++)
        {
            const Vec2& p = vertices[i];
            const Vec2& q = vertices[(i + 1) % n];
            const Vec2 e = q - p;
            region.normals.push_back(Vec2(e.y(), -e.x()).normalized());
            const double w = cross(p, q);
            a += w;
            c += w * (p + q);
        }
        region.center = c / (3.0 * a);
        return region;
    }
}
