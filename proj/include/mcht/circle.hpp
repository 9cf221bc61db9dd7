#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace mcht
{

    /// Circle with integer center (u, v) and radius r; `support` is the accumulator vote at the center.
    struct Circle
    {
        int u = 0;
        int v = 0;
        int r = 0;
        std::int64_t support = 0;

        friend bool operator==(const Circle &, const Circle &) = default;
    };

    inline std::int64_t squared_distance(int x0, int y0, int x1, int y1) noexcept
    {
        const std::int64_t dx = x1 - x0, dy = y1 - y0;
        return dx * dx + dy * dy;
    }

    /// Pixel lies in the closed disk of radius r.
    inline bool in_disk(int x, int y, int cu, int cv, double r) noexcept
    {
        return static_cast<double>(squared_distance(x, y, cu, cv)) <= r * r;
    }

    /// Midpoint-algorithm outline of a circle centered at the origin; may repeat points.
    inline std::vector<std::pair<int, int>> midpoint_circle(int r)
    {
        std::vector<std::pair<int, int>> pts;
        if (r <= 0)
        {
            pts.emplace_back(0, 0);
            return pts;
        }
        int x = 0, y = r;
        int d = 1 - r;
        while (x <= y)
        {
            for (auto [a, b] : {std::pair{x, y}, std::pair{y, x}})
            {
                pts.emplace_back(a, b);
                pts.emplace_back(-a, b);
                pts.emplace_back(a, -b);
                pts.emplace_back(-a, -b);
            }
            if (d < 0)
            {
                d += 2 * x + 3;
            }
            else
            {
                d += 2 * (x - y) + 5;
                --y;
            }
            ++x;
        }
        return pts;
    }

} // namespace mcht
