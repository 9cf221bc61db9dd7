#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mcht/circle.hpp"
#include "mcht/edges.hpp"
#include "mcht/image.hpp"

namespace testing_support
{

    inline mcht::GrayImage random_image(std::mt19937_64 &rng, int w, int h, int depth = 8, int lo = 0, int hi = -1)
    {
        if (hi < 0)
            hi = (1 << depth) - 1;
        std::uniform_int_distribution<int> d(lo, hi);
        std::vector<std::uint16_t> px(static_cast<std::size_t>(w) * h);
        for (auto &p : px)
            p = static_cast<std::uint16_t>(d(rng));
        return mcht::GrayImage(w, h, depth, std::move(px));
    }

    inline mcht::GrayImage constant_image(int w, int h, std::uint16_t v, int depth = 8)
    {
        return mcht::GrayImage(w, h, depth, std::vector<std::uint16_t>(static_cast<std::size_t>(w) * h, v));
    }

    /// Disk raster with the center at (cu, cv): inside iff dx^2 + dy^2 <= r^2.
    inline mcht::GrayImage disk_image(int w, int h, int cu, int cv, int r, std::uint16_t fg, std::uint16_t bg, int depth = 8)
    {
        std::vector<std::uint16_t> px(static_cast<std::size_t>(w) * h, bg);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if ((x - cu) * (x - cu) + (y - cv) * (y - cv) <= r * r)
                    px[static_cast<std::size_t>(y) * w + x] = fg;
        return mcht::GrayImage(w, h, depth, std::move(px));
    }

    /// Number of lattice points with x^2 + y^2 <= r^2.
    inline int disk_count(int r)
    {
        int n = 0;
        for (int y = -r; y <= r; ++y)
            for (int x = -r; x <= r; ++x)
                n += x * x + y * y <= r * r;
        return n;
    }

    /// Fresh per-test scratch directory under the system temp dir.
    inline std::filesystem::path scratch_dir(const std::string &name)
    {
        auto dir = std::filesystem::temp_directory_path() / ("mcht_test_" + name);
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
        return dir;
    }

    /// Edge pixels whose rounded distance from (u, v) equals r.
    inline std::int64_t ring_support(const mcht::EdgeMap &e, int u, int v, int r)
    {
        std::int64_t n = 0;
        for (int y = 0; y < e.height; ++y)
            for (int x = 0; x < e.width; ++x)
                if (e.at(x, y) && std::lround(std::sqrt(double((x - u) * (x - u) + (y - v) * (y - v)))) == r)
                    ++n;
        return n;
    }

    /// Exhaustive maximizer of ring support over every (u, v, r); first in (r, v, u) scan order on ties.
    inline mcht::Circle exhaustive_best_circle(const mcht::EdgeMap &e, int r_min, int r_max)
    {
        const auto pts = e.points();
        const int band = r_max - r_min + 1;
        std::vector<std::int64_t> support(static_cast<std::size_t>(band) * e.width * e.height, 0);
        for (int v = 0; v < e.height; ++v)
            for (int u = 0; u < e.width; ++u)
                for (const auto &p : pts)
                {
                    const long r = std::lround(std::sqrt(double((p.x - u) * (p.x - u) + (p.y - v) * (p.y - v))));
                    if (r >= r_min && r <= r_max)
                        ++support[(static_cast<std::size_t>(r - r_min) * e.height + v) * e.width + u];
                }
        mcht::Circle best{0, 0, 0, -1};
        for (int r = r_min; r <= r_max; ++r)
            for (int v = 0; v < e.height; ++v)
                for (int u = 0; u < e.width; ++u)
                {
                    const auto n = support[(static_cast<std::size_t>(r - r_min) * e.height + v) * e.width + u];
                    if (n > best.support)
                        best = {u, v, r, n};
                }
        return best;
    }

    struct EdgeScene
    {
        mcht::EdgeMap edges;
        mcht::Circle circle;
    };

    /// Random edge map: one digital circle (pixels at rounded distance r, outward gradient angles
    /// with jitter, random dropout) plus uniformly scattered clutter pixels with random angles.
    inline EdgeScene random_edge_scene(std::mt19937_64 &rng, int max_size = 64, int r_lo = 6, int r_hi = 10)
    {
        constexpr double pi = 3.14159265358979323846;
        const int r = std::uniform_int_distribution<int>(r_lo, r_hi)(rng);
        const int lo = std::max(2 * r + 4, max_size / 2);
        const int w = std::uniform_int_distribution<int>(lo, max_size)(rng);
        const int h = std::uniform_int_distribution<int>(lo, max_size)(rng);
        const int u = std::uniform_int_distribution<int>(r + 1, w - r - 2)(rng);
        const int v = std::uniform_int_distribution<int>(r + 1, h - r - 2)(rng);
        const double keep = std::uniform_real_distribution<double>(0.7, 1.0)(rng);
        std::uniform_real_distribution<double> unit(0.0, 1.0), jitter(-0.15, 0.15), angle(-pi, pi);
        mcht::EdgeMap e(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
            {
                const double d = std::sqrt(double((x - u) * (x - u) + (y - v) * (y - v)));
                if (std::lround(d) == r && unit(rng) < keep)
                    e.mark(x, y, std::atan2(double(y - v), double(x - u)) + jitter(rng));
            }
        const int clutter = std::uniform_int_distribution<int>(0, w * h / 80)(rng);
        std::uniform_int_distribution<int> xd(0, w - 1), yd(0, h - 1);
        for (int k = 0; k < clutter; ++k)
        {
            const int x = xd(rng), y = yd(rng);
            if (!e.at(x, y))
                e.mark(x, y, angle(rng));
        }
        return {std::move(e), mcht::Circle{u, v, r, 0}};
    }

} // namespace testing_support
