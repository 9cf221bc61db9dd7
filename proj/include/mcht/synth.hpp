#pragma once

// Synthetic two-channel plates with known spot geometry, intensities and
// masks, plus pixel-level segmentation scoring against them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "circle.hpp"
#include "error.hpp"
#include "image.hpp"

namespace mcht
{

    enum class SpotProfile
    {
        flat,     ///< constant foreground inside the disk
        gaussian, ///< Gaussian dome inside the disk, peak at the center, sharp cut at the disk edge
    };

    struct SynthParams
    {
        int rows = 21;
        int cols = 24;
        int pitch = 32;
        int r_lo = 6;
        int r_hi = 10;
        int fg_lo = 1500; ///< foreground peak intensity range, sampled per spot and channel
        int fg_hi = 6000;
        int background = 500;
        double noise_sigma = 100.0;
        double dropout = 0.0;
        int jitter = 2; ///< max integer center offset per axis
        std::uint64_t seed = 1;
        int bit_depth = 16;
        SpotProfile profile = SpotProfile::flat;
        double gaussian_width = 1.0; ///< dome sigma as a multiple of the spot radius
        bool equal_channels = false; ///< green foreground copies red, so every expression level is 0

        int width() const noexcept { return cols * pitch; }
        int height() const noexcept { return rows * pitch; }
    };

    inline void validate(const SynthParams &p)
    {
        auto fail = [](const std::string &m) { throw ParamError("synth: " + m); };
        if (p.rows < 1 || p.cols < 1)
            fail("grid must have at least one cell");
        if (p.r_lo < 1 || p.r_hi < p.r_lo)
            fail("radius range must satisfy 1 <= r_lo <= r_hi");
        if (p.jitter < 0)
            fail("jitter must be non-negative");
        if (p.pitch <= 2 * p.r_hi + 2 * p.jitter)
            fail("pitch " + std::to_string(p.pitch) + " lets spots collide (needs > 2*r_hi + 2*jitter)");
        if (p.bit_depth != 8 && p.bit_depth != 16)
            fail("bit depth must be 8 or 16");
        const int maxv = (1 << p.bit_depth) - 1;
        if (p.fg_lo > p.fg_hi || p.fg_lo < 0 || p.fg_hi > maxv)
            fail("foreground range invalid");
        if (p.background < 0 || p.background > maxv)
            fail("background level invalid");
        if (!(p.noise_sigma >= 0.0))
            fail("noise sigma must be non-negative");
        if (!(p.dropout >= 0.0 && p.dropout <= 1.0))
            fail("dropout must lie in [0,1]");
        if (!(p.gaussian_width > 0.0))
            fail("gaussian width must be positive");
    }

    /// Ground truth for one grid cell.
    struct SpotTruth
    {
        int row = 0;
        int col = 0;
        std::optional<Circle> circle; ///< absent when the spot dropped out
        int red_fg = 0;
        int green_fg = 0;
        double expression = 0.0; ///< log2 ratio of the noiseless background-subtracted channel means
    };

    struct SyntheticPlate
    {
        SynthParams params;
        ChannelPair channels;
        std::vector<SpotTruth> truth; ///< row-major, rows * cols entries
        BinaryMap red_mask;
        BinaryMap green_mask;

        const SpotTruth &cell(int row, int col) const { return truth.at(static_cast<std::size_t>(row) * params.cols + col); }

        std::vector<Circle> truth_circles() const
        {
            std::vector<Circle> out;
            for (const auto &t : truth)
                if (t.circle)
                    out.push_back(*t.circle);
            return out;
        }
    };

    /// Deterministic helpers over mt19937_64, whose output sequence is fixed by the standard.
    class SplitRng
    {
    public:
        explicit SplitRng(std::uint64_t seed) : eng_(seed) {}

        std::uint64_t next() { return eng_(); }

        /// Uniform integer in [lo, hi].
        int uniform_int(int lo, int hi)
        {
            const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
            return lo + static_cast<int>(eng_() % span);
        }

        /// Uniform double in [0, 1).
        double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

        double gaussian()
        {
            constexpr double two_pi = 6.283185307179586476925;
            const double u1 = 1.0 - uniform();
            const double u2 = uniform();
            return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
        }

    private:
        std::mt19937_64 eng_;
    };

    namespace synth_detail
    {
        /// Noiseless intensity of a spot pixel at squared distance d2 from the center.
        inline double spot_value(const SynthParams &p, int fg, int r, std::int64_t d2)
        {
            if (p.profile == SpotProfile::flat)
                return fg;
            const double s = p.gaussian_width * r;
            return p.background + (fg - p.background) * std::exp(-static_cast<double>(d2) / (2.0 * s * s));
        }
    } // namespace synth_detail

    inline SyntheticPlate generate(const SynthParams &p)
    {
        validate(p);
        SplitRng rng(p.seed);
        SyntheticPlate plate;
        plate.params = p;
        const int w = p.width(), h = p.height();
        std::vector<double> red(static_cast<std::size_t>(w) * h, p.background);
        std::vector<double> green(red.size(), p.background);
        plate.red_mask = BinaryMap(w, h);

        for (int row = 0; row < p.rows; ++row)
        {
            for (int col = 0; col < p.cols; ++col)
            {
                SpotTruth t;
                t.row = row;
                t.col = col;
                const bool dropped = rng.uniform() < p.dropout;
                const int r = rng.uniform_int(p.r_lo, p.r_hi);
                const int dx = rng.uniform_int(-p.jitter, p.jitter);
                const int dy = rng.uniform_int(-p.jitter, p.jitter);
                t.red_fg = rng.uniform_int(p.fg_lo, p.fg_hi);
                t.green_fg = p.equal_channels ? t.red_fg : rng.uniform_int(p.fg_lo, p.fg_hi);
                if (dropped)
                {
                    t.red_fg = t.green_fg = p.background;
                    plate.truth.push_back(t);
                    continue;
                }
                const int cu = col * p.pitch + p.pitch / 2 + dx;
                const int cv = row * p.pitch + p.pitch / 2 + dy;
                t.circle = Circle{cu, cv, r, 0};

                double sum_r = 0.0, sum_g = 0.0;
                std::int64_t n = 0;
                for (int y = cv - r; y <= cv + r; ++y)
                    for (int x = cu - r; x <= cu + r; ++x)
                    {
                        const auto d2 = squared_distance(x, y, cu, cv);
                        if (d2 > static_cast<std::int64_t>(r) * r)
                            continue;
                        const auto i = static_cast<std::size_t>(y) * w + x;
                        red[i] = synth_detail::spot_value(p, t.red_fg, r, d2);
                        green[i] = synth_detail::spot_value(p, t.green_fg, r, d2);
                        sum_r += red[i];
                        sum_g += green[i];
                        ++n;
                        plate.red_mask.set(x, y, true);
                    }
                const double ir = sum_r / n - p.background, ig = sum_g / n - p.background;
                t.expression = (ir > 0.0 && ig > 0.0) ? std::log2(ir / ig) : 0.0;
                plate.truth.push_back(t);
            }
        }

        const double maxv = (1 << p.bit_depth) - 1;
        auto finish = [&](const std::vector<double> &plane) {
            std::vector<GrayImage::value_type> px(plane.size());
            for (std::size_t i = 0; i < plane.size(); ++i)
            {
                double v = plane[i];
                if (p.noise_sigma > 0.0)
                    v += p.noise_sigma * rng.gaussian();
                px[i] = static_cast<GrayImage::value_type>(std::clamp(std::round(v), 0.0, maxv));
            }
            return GrayImage(w, h, p.bit_depth, std::move(px));
        };
        GrayImage red_img = finish(red);
        GrayImage green_img = finish(green);
        plate.channels = ChannelPair(std::move(red_img), std::move(green_img));
        plate.green_mask = plate.red_mask;
        return plate;
    }

    struct SegmentationScore
    {
        std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
        double precision = 0.0;
        double recall = 0.0;
        double f1 = 0.0;
        double accuracy = 0.0;
    };

    /// Pixel confusion metrics; empty classes score 1 when the other side agrees, and two empty masks give F1 = 1.
    inline SegmentationScore score_segmentation(const BinaryMap &pred, const BinaryMap &truth)
    {
        if (pred.width != truth.width || pred.height != truth.height)
            throw ParamError("score_segmentation: mask dimensions differ");
        SegmentationScore s;
        for (std::size_t i = 0; i < pred.mask.size(); ++i)
        {
            const bool a = pred.mask[i] != 0, b = truth.mask[i] != 0;
            if (a && b)
                ++s.tp;
            else if (a)
                ++s.fp;
            else if (b)
                ++s.fn;
            else
                ++s.tn;
        }
        const auto ratio = [](std::int64_t num, std::int64_t den, bool other_empty) {
            return den == 0 ? (other_empty ? 1.0 : 0.0) : static_cast<double>(num) / static_cast<double>(den);
        };
        s.precision = ratio(s.tp, s.tp + s.fp, s.fn == 0);
        s.recall = ratio(s.tp, s.tp + s.fn, s.fp == 0);
        s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        const auto total = s.tp + s.fp + s.fn + s.tn;
        s.accuracy = total ? static_cast<double>(s.tp + s.tn) / static_cast<double>(total) : 1.0;
        return s;
    }

} // namespace mcht
