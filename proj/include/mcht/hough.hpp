#pragma once

// Gradient-constrained circular Hough transform over a 2-D center
// accumulator. Each edge pixel (x, y) with gradient angle theta votes for the
// centers u = x - r cos(theta), v = y - r sin(theta) for every integer radius
// in the band (and the mirrored center when voting bidirectionally). The
// radius is recovered afterwards from a histogram of edge distances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "circle.hpp"
#include "edges.hpp"
#include "error.hpp"
#include "image.hpp"

namespace mcht
{

    struct ChtParams
    {
        int r_min = 6;
        int r_max = 10;
        double peak_threshold_frac = 0.5;
        /// Minimum distance between reported centers; defaults to 2 * r_min.
        std::optional<double> min_center_separation;
        bool bidirectional = true;
        /// Radius histogramming counts an edge pixel only when its gradient lies within this angle of the
        /// radial line through the center (either sign); pi/2 counts every edge pixel.
        double radius_angle_tolerance = std::numbers::pi / 4.0;

        double separation() const noexcept { return min_center_separation.value_or(2.0 * r_min); }
        int band() const noexcept { return r_max - r_min + 1; }
    };

    inline void validate(const ChtParams &p)
    {
        if (p.r_min < 1 || p.r_max < p.r_min)
            throw ParamError("radius band requires 1 <= r_min <= r_max, got [" + std::to_string(p.r_min) + "," +
                             std::to_string(p.r_max) + "]");
        if (!(p.peak_threshold_frac > 0.0 && p.peak_threshold_frac <= 1.0))
            throw ParamError("peak threshold fraction must lie in (0,1]");
        if (p.separation() < 0.0)
            throw ParamError("center separation must be non-negative");
        if (!(p.radius_angle_tolerance > 0.0 && p.radius_angle_tolerance <= std::numbers::pi / 2.0))
            throw ParamError("radius angle tolerance must lie in (0, pi/2]");
    }

    /// Vote counts A(u, v) over candidate centers, same shape as the image.
    struct CircleAccumulator
    {
        int width = 0;
        int height = 0;
        std::vector<std::int64_t> votes;

        CircleAccumulator() = default;
        CircleAccumulator(int w, int h) : width(w), height(h), votes(static_cast<std::size_t>(w) * h, 0) {}

        std::int64_t at(int u, int v) const noexcept { return votes[static_cast<std::size_t>(v) * width + u]; }
        std::int64_t &at(int u, int v) noexcept { return votes[static_cast<std::size_t>(v) * width + u]; }

        std::int64_t total() const noexcept
        {
            std::int64_t s = 0;
            for (auto c : votes)
                s += c;
            return s;
        }

        std::int64_t max() const noexcept { return votes.empty() ? 0 : *std::max_element(votes.begin(), votes.end()); }

        /// Elementwise sum, for merging accumulators built from disjoint edge subsets.
        CircleAccumulator &operator+=(const CircleAccumulator &o)
        {
            if (o.width != width || o.height != height)
                throw ParamError("accumulator shapes differ");
            for (std::size_t i = 0; i < votes.size(); ++i)
                votes[i] += o.votes[i];
            return *this;
        }
    };

    /// Votes outside the array are dropped.
    inline CircleAccumulator vote(const EdgeMap &edges, const ChtParams &p)
    {
        validate(p);
        CircleAccumulator acc(edges.width, edges.height);
        auto bump = [&](double u, double v) {
            const long iu = std::lround(u), iv = std::lround(v);
            if (iu >= 0 && iv >= 0 && iu < acc.width && iv < acc.height)
                ++acc.at(static_cast<int>(iu), static_cast<int>(iv));
        };
        for (int y = 0; y < edges.height; ++y)
        {
            for (int x = 0; x < edges.width; ++x)
            {
                if (!edges.at(x, y))
                    continue;
                const double theta = edges.angle_at(x, y);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int r = p.r_min; r <= p.r_max; ++r)
                {
                    bump(x - r * c, y - r * s);
                    if (p.bidirectional)
                        bump(x + r * c, y + r * s);
                }
            }
        }
        return acc;
    }

    /// 8-neighborhood local maxima above the threshold, greedily thinned by distance; strongest first.
    inline std::vector<Circle> find_centers(const CircleAccumulator &acc, const ChtParams &p)
    {
        validate(p);
        const std::int64_t global = acc.max();
        if (global <= 0)
            return {};
        const double floor = p.peak_threshold_frac * static_cast<double>(global);

        std::vector<Circle> candidates;
        for (int v = 0; v < acc.height; ++v)
        {
            for (int u = 0; u < acc.width; ++u)
            {
                const std::int64_t c = acc.at(u, v);
                if (c <= 0 || static_cast<double>(c) < floor)
                    continue;
                bool is_max = true;
                for (int dv = -1; dv <= 1 && is_max; ++dv)
                    for (int du = -1; du <= 1; ++du)
                    {
                        const int nu = u + du, nv = v + dv;
                        if ((du || dv) && nu >= 0 && nv >= 0 && nu < acc.width && nv < acc.height && acc.at(nu, nv) > c)
                        {
                            is_max = false;
                            break;
                        }
                    }
                if (is_max)
                    candidates.push_back({u, v, 0, c});
            }
        }
        // Row-major scan already orders by (v, u); stable sort keeps that as the tie-break.
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Circle &a, const Circle &b) { return a.support > b.support; });

        const double sep2 = p.separation() * p.separation();
        std::vector<Circle> kept;
        for (const auto &c : candidates)
        {
            const bool clear = std::none_of(kept.begin(), kept.end(), [&](const Circle &k) {
                return static_cast<double>(squared_distance(c.u, c.v, k.u, k.v)) < sep2;
            });
            if (clear)
                kept.push_back(c);
        }
        return kept;
    }

    /// Gradient-consistent edge pixels at each rounded distance r_min..r_max from (u, v).
    inline std::vector<std::int64_t> ring_histogram(int u, int v, const EdgeMap &edges, const ChtParams &p)
    {
        validate(p);
        if (u < 0 || v < 0 || u >= edges.width || v >= edges.height)
            throw BoundsError("center outside edge map");
        std::vector<std::int64_t> hist(static_cast<std::size_t>(p.band()), 0);
        // Only pixels within r_max + 1 can round into the band.
        const int reach = p.r_max + 1;
        for (int y = std::max(0, v - reach); y <= std::min(edges.height - 1, v + reach); ++y)
            for (int x = std::max(0, u - reach); x <= std::min(edges.width - 1, u + reach); ++x)
            {
                if (!edges.at(x, y))
                    continue;
                const long r = std::lround(std::sqrt(static_cast<double>(squared_distance(x, y, u, v))));
                if (r < p.r_min || r > p.r_max)
                    continue;
                const double radial = std::atan2(static_cast<double>(y - v), static_cast<double>(x - u));
                if (std::abs(std::remainder(edges.angle_at(x, y) - radial, std::numbers::pi)) <= p.radius_angle_tolerance)
                    ++hist[static_cast<std::size_t>(r - p.r_min)];
            }
        return hist;
    }

    /// Mode of the rounded center-to-edge distances inside [r_min, r_max]; ties go to the smaller radius.
    /// Only edges whose gradient roughly points along the radius are counted.
    inline int estimate_radius(int u, int v, const EdgeMap &edges, const ChtParams &p)
    {
        const auto hist = ring_histogram(u, v, edges, p);
        const auto best = std::max_element(hist.begin(), hist.end());
        if (*best == 0)
            throw NoSupportError("no edge pixels within radius band of (" + std::to_string(u) + "," + std::to_string(v) + ")");
        return p.r_min + static_cast<int>(best - hist.begin());
    }

    /// Radii for the given centers; centers without support take the lower median of the others,
    /// and are dropped when no center has support.
    inline std::vector<Circle> attach_radii(std::vector<Circle> centers, const EdgeMap &edges, const ChtParams &p)
    {
        std::vector<int> radii;
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < centers.size(); ++i)
        {
            try
            {
                centers[i].r = estimate_radius(centers[i].u, centers[i].v, edges, p);
                radii.push_back(centers[i].r);
            }
            catch (const NoSupportError &)
            {
                missing.push_back(i);
            }
        }
        if (missing.empty())
            return centers;
        if (radii.empty())
            return {};
        std::sort(radii.begin(), radii.end());
        const int fallback = radii[(radii.size() - 1) / 2];
        for (auto i : missing)
            centers[i].r = fallback;
        return centers;
    }

    inline std::vector<Circle> detect_circles(const EdgeMap &edges, const ChtParams &cht)
    {
        const auto acc = vote(edges, cht);
        return attach_radii(find_centers(acc, cht), edges, cht);
    }

    /// Canny, vote, peak picking and radius recovery; strongest circle first.
    inline std::vector<Circle> detect_circles(const GrayImage &img, const CannyParams &canny_params, const ChtParams &cht)
    {
        validate(cht);
        return detect_circles(canny(img, canny_params), cht);
    }

} // namespace mcht
