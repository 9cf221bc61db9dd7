#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "image.hpp"

namespace mcht
{

    /// Sobel responses and their polar form. Angle is atan2(gy, gx) in (-pi, pi], 0 where the magnitude is 0.
    struct GradientField
    {
        int width = 0;
        int height = 0;
        std::vector<std::int32_t> gx;
        std::vector<std::int32_t> gy;
        std::vector<double> magnitude;
        std::vector<double> angle;

        std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width + x; }
        double magnitude_at(int x, int y) const noexcept { return magnitude[index(x, y)]; }
    };

    struct EdgePoint
    {
        int x = 0;
        int y = 0;
        double angle = 0.0;
    };

    /// Boolean edge raster; every edge pixel keeps its gradient angle.
    struct EdgeMap
    {
        int width = 0;
        int height = 0;
        std::vector<std::uint8_t> edges;
        std::vector<double> angle;

        EdgeMap() = default;
        EdgeMap(int w, int h)
            : width(w), height(h), edges(static_cast<std::size_t>(w) * h, 0), angle(static_cast<std::size_t>(w) * h, 0.0) {}

        bool at(int x, int y) const noexcept { return edges[static_cast<std::size_t>(y) * width + x] != 0; }
        double angle_at(int x, int y) const noexcept { return angle[static_cast<std::size_t>(y) * width + x]; }

        void mark(int x, int y, double theta)
        {
            const auto i = static_cast<std::size_t>(y) * width + x;
            edges[i] = 1;
            angle[i] = theta;
        }

        /// Edge pixels in row-major order.
        std::vector<EdgePoint> points() const
        {
            std::vector<EdgePoint> pts;
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x)
                    if (at(x, y))
                        pts.push_back({x, y, angle_at(x, y)});
            return pts;
        }

        std::size_t count() const noexcept { return static_cast<std::size_t>(std::count(edges.begin(), edges.end(), 1)); }
    };

    struct CannyParams
    {
        double high_frac = 0.8; ///< percentile of the gradient magnitudes used as the strong threshold
        double low_frac = 0.4;  ///< weak threshold as a fraction of the strong one
    };

    inline GradientField sobel_gradients(const GrayImage &img)
    {
        if (img.width() < 3 || img.height() < 3)
            throw ParamError("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                             " smaller than the 3x3 Sobel kernel");
        GradientField g;
        g.width = img.width();
        g.height = img.height();
        const std::size_t n = img.pixels().size();
        g.gx.resize(n);
        g.gy.resize(n);
        g.magnitude.resize(n);
        g.angle.resize(n);
        for (int y = 0; y < img.height(); ++y)
        {
            for (int x = 0; x < img.width(); ++x)
            {
                auto p = [&](int dx, int dy) { return static_cast<std::int32_t>(img.clamped(x + dx, y + dy)); };
                const std::int32_t gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
                const std::int32_t gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
                const auto i = g.index(x, y);
                g.gx[i] = gx;
                g.gy[i] = gy;
                const double fx = gx, fy = gy;
                g.magnitude[i] = std::sqrt(fx * fx + fy * fy);
                g.angle[i] = (gx == 0 && gy == 0) ? 0.0 : std::atan2(fy, fx);
            }
        }
        return g;
    }

    namespace edges_detail
    {
        /// Neighbor step along the gradient direction quantized to 0/45/90/135 degrees.
        /// Sign-normalized first so that opposite gradients share a bin; boundary ties go to the lower bin.
        inline std::pair<int, int> nms_step(std::int32_t gx, std::int32_t gy) noexcept
        {
            if (gy < 0 || (gy == 0 && gx < 0))
            {
                gx = -gx;
                gy = -gy;
            }
            constexpr double pi = 3.14159265358979323846;
            const double deg = std::atan2(static_cast<double>(gy), static_cast<double>(gx)) * 180.0 / pi; // [0, 180)
            if (deg <= 22.5 || deg > 157.5)
                return {1, 0};
            if (deg <= 67.5)
                return {1, 1};
            if (deg <= 112.5)
                return {0, 1};
            return {-1, 1};
        }

        /// Nearest-rank percentile over all values, zeros included.
        inline double percentile(std::vector<double> values, double frac)
        {
            if (values.empty())
                return 0.0;
            auto rank = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(values.size())));
            rank = std::clamp<std::size_t>(rank, 1, values.size());
            std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
            return values[rank - 1];
        }
    } // namespace edges_detail

    /// Pixels that survive non-maximum suppression: strictly above the backward neighbor, at least the forward one.
    inline std::vector<std::uint8_t> non_maximum_suppression(const GradientField &g)
    {
        std::vector<std::uint8_t> keep(g.magnitude.size(), 0);
        auto mag = [&](int x, int y) { return (x < 0 || y < 0 || x >= g.width || y >= g.height) ? 0.0 : g.magnitude_at(x, y); };
        for (int y = 0; y < g.height; ++y)
        {
            for (int x = 0; x < g.width; ++x)
            {
                const auto i = g.index(x, y);
                const double m = g.magnitude[i];
                if (m <= 0.0)
                    continue;
                const auto [sx, sy] = edges_detail::nms_step(g.gx[i], g.gy[i]);
                if (m > mag(x - sx, y - sy) && m >= mag(x + sx, y + sy))
                    keep[i] = 1;
            }
        }
        return keep;
    }

    inline void validate(const CannyParams &p)
    {
        if (!(p.low_frac > 0.0 && p.low_frac < 1.0))
            throw ParamError("canny low fraction must lie in (0,1)");
        if (!(p.high_frac > 0.0 && p.high_frac <= 1.0))
            throw ParamError("canny high fraction must lie in (0,1]");
    }

    /// Canny without pre-smoothing: Sobel, NMS, percentile double threshold, 8-connected hysteresis.
    /// The strong threshold is a percentile of all gradient magnitudes, so on a noiseless image (mostly
    /// zero gradient) every nonzero NMS survivor seeds an edge regardless of its contrast.
    inline EdgeMap canny(const GrayImage &img, const CannyParams &p = {})
    {
        validate(p);
        const GradientField g = sobel_gradients(img);
        const auto thin = non_maximum_suppression(g);
        const double high = edges_detail::percentile(g.magnitude, p.high_frac);
        const double low = p.low_frac * high;

        EdgeMap out(g.width, g.height);

        std::vector<std::pair<int, int>> stack;
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x)
            {
                const auto i = g.index(x, y);
                if (thin[i] && g.magnitude[i] >= high && g.magnitude[i] > 0.0)
                {
                    out.mark(x, y, g.angle[i]);
                    stack.emplace_back(x, y);
                }
            }
        while (!stack.empty())
        {
            const auto [x, y] = stack.back();
            stack.pop_back();
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= g.width || ny >= g.height || out.at(nx, ny))
                        continue;
                    const auto j = g.index(nx, ny);
                    if (thin[j] && g.magnitude[j] >= low && g.magnitude[j] > 0.0)
                    {
                        out.mark(nx, ny, g.angle[j]);
                        stack.emplace_back(nx, ny);
                    }
                }
        }
        return out;
    }

} // namespace mcht
