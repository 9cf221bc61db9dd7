#pragma once

// Spot statistics, log2 expression ratios and Q-index quality scores.
//
// The background-variability and background-level sub-scores are normalized
// against the plate: q_bkg1 = 1 - cv / max(cv) and q_bkg2 = lvl / max(lvl),
// with cv = BSD / B_mean and lvl = bkg0 / (bkg0 + B_mean). Both land in
// [0, 1] and reward low, uniform local background.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "image.hpp"
#include "segment.hpp"

namespace mcht
{

    struct SpotStats
    {
        double f_mean = 0.0;
        double b_mean = 0.0;
        double b_sd = 0.0; ///< population standard deviation
        std::size_t n_fg = 0;
        std::size_t n_bg = 0;
    };

    /// Class means over `mask`; pixels flagged in `ignore` belong to neither class.
    inline SpotStats compute_stats(const GrayImage &img, const BinaryMap &mask, const BinaryMap *ignore = nullptr)
    {
        if (mask.width != img.width() || mask.height != img.height())
            throw ParamError("mask does not match image dimensions");
        if (ignore && (ignore->width != img.width() || ignore->height != img.height()))
            throw ParamError("ignore map does not match image dimensions");
        const auto px = img.pixels();
        std::int64_t sum_f = 0, sum_b = 0;
        SpotStats s;
        for (std::size_t i = 0; i < px.size(); ++i)
        {
            if (ignore && ignore->mask[i])
                continue;
            if (mask.mask[i])
            {
                sum_f += px[i];
                ++s.n_fg;
            }
            else
            {
                sum_b += px[i];
                ++s.n_bg;
            }
        }
        if (s.n_fg == 0)
            throw EmptyClassError("spot has no foreground pixels");
        if (s.n_bg == 0)
            throw EmptyClassError("spot has no background pixels");
        s.f_mean = static_cast<double>(sum_f) / static_cast<double>(s.n_fg);
        s.b_mean = static_cast<double>(sum_b) / static_cast<double>(s.n_bg);
        double ss = 0.0;
        for (std::size_t i = 0; i < px.size(); ++i)
        {
            if ((ignore && ignore->mask[i]) || mask.mask[i])
                continue;
            const double d = px[i] - s.b_mean;
            ss += d * d;
        }
        s.b_sd = std::sqrt(ss / static_cast<double>(s.n_bg));
        return s;
    }

    /// The 1-pixel annulus r < d <= r + 1 around the spot circle, excluded from both classes.
    inline BinaryMap guard_annulus(const SpotRegion &spot)
    {
        BinaryMap g(spot.width(), spot.height());
        const double r = spot.circle.r;
        for (int y = 0; y < spot.height(); ++y)
            for (int x = 0; x < spot.width(); ++x)
                g.set(x, y, !in_disk(x, y, spot.circle.u, spot.circle.v, r) && in_disk(x, y, spot.circle.u, spot.circle.v, r + 1.0));
        return g;
    }

    inline SpotStats spot_stats(const SpotRegion &spot, const SpotSegmentation &seg, Channel channel)
    {
        const auto guard = guard_annulus(spot);
        return compute_stats(spot.channel(channel), seg.mask, &guard);
    }

    struct Expression
    {
        double red_intensity = 0.0;
        double green_intensity = 0.0;
        double level = 0.0;
        bool clamped = false;
    };

    /// Background-subtracted channel intensities floored at `epsilon`, and their log2 ratio.
    inline Expression expression_level(const SpotStats &red, const SpotStats &green, double epsilon = 1.0)
    {
        Expression e;
        const double r = red.f_mean - red.b_mean, g = green.f_mean - green.b_mean;
        e.clamped = r < epsilon || g < epsilon;
        e.red_intensity = std::max(r, epsilon);
        e.green_intensity = std::max(g, epsilon);
        e.level = std::log2(e.red_intensity / e.green_intensity);
        return e;
    }

    /// Plate-wide background references for one channel.
    struct PlateContext
    {
        double bkg0 = 0.0;
        double max_cv = 0.0;
        double max_lvl = 0.0;
    };

    namespace quantify_detail
    {
        inline double cv(const SpotStats &s)
        {
            if (s.b_sd == 0.0)
                return 0.0;
            if (s.b_mean == 0.0)
                throw DegenerateError("background variability undefined: zero background mean with nonzero spread");
            return s.b_sd / s.b_mean;
        }

        inline double level(const SpotStats &s, double bkg0)
        {
            if (bkg0 + s.b_mean == 0.0)
                throw DegenerateError("background level undefined: zero global and local background");
            return bkg0 / (bkg0 + s.b_mean);
        }
    } // namespace quantify_detail

    inline PlateContext make_plate_context(std::span<const SpotStats> spots)
    {
        PlateContext ctx;
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto &s : spots)
        {
            sum += s.b_mean * static_cast<double>(s.n_bg);
            n += s.n_bg;
        }
        ctx.bkg0 = n ? sum / static_cast<double>(n) : 0.0;
        for (const auto &s : spots)
        {
            if (!(s.b_mean == 0.0 && s.b_sd > 0.0))
                ctx.max_cv = std::max(ctx.max_cv, quantify_detail::cv(s));
            if (ctx.bkg0 + s.b_mean > 0.0)
                ctx.max_lvl = std::max(ctx.max_lvl, quantify_detail::level(s, ctx.bkg0));
        }
        return ctx;
    }

    inline double q_sig_noise(const SpotStats &s)
    {
        const double den = s.f_mean + s.b_mean;
        return den == 0.0 ? 0.0 : std::clamp(s.f_mean / den, 0.0, 1.0);
    }

    inline double q_bkg1(const SpotStats &s, const PlateContext &ctx)
    {
        const double c = quantify_detail::cv(s);
        if (ctx.max_cv == 0.0)
            return 1.0;
        return std::clamp(1.0 - c / ctx.max_cv, 0.0, 1.0);
    }

    inline double q_bkg2(const SpotStats &s, const PlateContext &ctx)
    {
        if (!(ctx.max_lvl > 0.0))
            throw DegenerateError("background level score needs a plate with nonzero background");
        return std::clamp(quantify_detail::level(s, ctx.bkg0) / ctx.max_lvl, 0.0, 1.0);
    }

    /// Geometric mean of the three sub-scores.
    inline double q_com2(double sig_noise, double bkg1, double bkg2) { return std::cbrt(sig_noise * bkg1 * bkg2); }

    inline double q_index(double red_com2, double green_com2) { return 0.5 * (red_com2 + green_com2); }

    struct ChannelQuality
    {
        double sig_noise = 0.0;
        double bkg1 = 0.0;
        double bkg2 = 0.0;
        double com2 = 0.0;
    };

    inline ChannelQuality channel_quality(const SpotStats &s, const PlateContext &ctx)
    {
        ChannelQuality q;
        q.sig_noise = q_sig_noise(s);
        q.bkg1 = q_bkg1(s, ctx);
        q.bkg2 = q_bkg2(s, ctx);
        q.com2 = q_com2(q.sig_noise, q.bkg1, q.bkg2);
        return q;
    }

    struct ExpressionRecord
    {
        int spot_id = 0;
        int row = 0;
        int col = 0;
        Method method = Method::cht;
        Expression expression;
        ChannelQuality red;
        ChannelQuality green;
        double q_index = 0.0;
        bool valid = true; ///< false when the mask left a class empty; intensities then sit at epsilon with zero quality
    };

    /// A segmented spot ready for quantification.
    struct SegmentedSpot
    {
        const SpotRegion *region = nullptr;
        SpotSegmentation segmentation;
    };

    /// Two passes: per-spot stats and plate context per channel, then per-spot scores.
    inline std::vector<ExpressionRecord> quantify_spots(std::span<const SegmentedSpot> spots, int grid_cols, double epsilon = 1.0)
    {
        struct Pending
        {
            std::optional<SpotStats> red, green;
        };
        std::vector<Pending> stats(spots.size());
        std::vector<SpotStats> red_ok, green_ok;
        for (std::size_t i = 0; i < spots.size(); ++i)
        {
            try
            {
                stats[i].red = spot_stats(*spots[i].region, spots[i].segmentation, Channel::red);
                stats[i].green = spot_stats(*spots[i].region, spots[i].segmentation, Channel::green);
                red_ok.push_back(*stats[i].red);
                green_ok.push_back(*stats[i].green);
            }
            catch (const EmptyClassError &)
            {
                stats[i] = {};
            }
        }
        const PlateContext red_ctx = make_plate_context(red_ok), green_ctx = make_plate_context(green_ok);

        std::vector<ExpressionRecord> out;
        out.reserve(spots.size());
        for (std::size_t i = 0; i < spots.size(); ++i)
        {
            const auto &reg = *spots[i].region;
            ExpressionRecord rec;
            rec.row = reg.row;
            rec.col = reg.col;
            rec.spot_id = reg.row * grid_cols + reg.col;
            rec.method = spots[i].segmentation.method;
            if (!stats[i].red)
            {
                rec.valid = false;
                rec.expression = {epsilon, epsilon, 0.0, true};
                out.push_back(rec);
                continue;
            }
            rec.expression = expression_level(*stats[i].red, *stats[i].green, epsilon);
            rec.red = channel_quality(*stats[i].red, red_ctx);
            rec.green = channel_quality(*stats[i].green, green_ctx);
            rec.q_index = q_index(rec.red.com2, rec.green.com2);
            out.push_back(rec);
        }
        return out;
    }

    struct MethodSummary
    {
        Method method = Method::cht;
        std::size_t spots = 0;
        std::size_t valid = 0;
        double level_min = 0.0;
        double level_max = 0.0;
        double level_mean = 0.0;
        double q_index_mean = 0.0;
        std::optional<double> f1_mean; ///< mean per-spot pixel F1 against ground truth, when truth is available
    };

    inline MethodSummary summarize(Method m, std::span<const ExpressionRecord> records)
    {
        MethodSummary s;
        s.method = m;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0, q = 0.0;
        for (const auto &r : records)
        {
            if (r.method != m)
                continue;
            ++s.spots;
            if (!r.valid)
                continue;
            ++s.valid;
            lo = std::min(lo, r.expression.level);
            hi = std::max(hi, r.expression.level);
            sum += r.expression.level;
            q += r.q_index;
        }
        if (s.valid)
        {
            s.level_min = lo;
            s.level_max = hi;
            s.level_mean = sum / static_cast<double>(s.valid);
            s.q_index_mean = q / static_cast<double>(s.valid);
        }
        return s;
    }

    struct CompareOptions
    {
        int margin = 4;
        Channel channel = Channel::red;      ///< channel driving KMIS and the margin classifier
        std::optional<MarginModel> svm;       ///< required when the svm method is requested
        std::optional<int> fixed_radius;      ///< defaults to the lower median grid radius
        double epsilon = 1.0;
        const BinaryMap *truth_mask = nullptr; ///< plate-sized ground truth for F1 scoring
    };

    struct ComparisonReport
    {
        std::vector<ExpressionRecord> records; ///< method-major, then row-major spot order
        std::vector<MethodSummary> summaries;
    };

    inline int median_grid_radius(const SpotGrid &grid)
    {
        std::vector<int> r;
        for (const auto &c : grid.cells)
            r.push_back(c.circle.r);
        std::sort(r.begin(), r.end());
        return r.empty() ? 0 : r[(r.size() - 1) / 2];
    }

    inline std::vector<SpotRegion> extract_all(const ChannelPair &plate, const SpotGrid &grid, int margin)
    {
        std::vector<SpotRegion> out;
        out.reserve(grid.cells.size());
        for (const auto &c : grid.cells)
            out.push_back(extract_spot(plate, c.circle, c.row, c.col, margin));
        return out;
    }

    inline SpotSegmentation segment_spot(const SpotRegion &spot, Method m, const CompareOptions &opt, int fixed_radius)
    {
        switch (m)
        {
        case Method::cht: return segment_cht(spot);
        case Method::kmeans: return segment_kmeans(spot, opt.channel);
        case Method::fixed: return segment_fixed_circle(spot, fixed_radius);
        case Method::svm:
            if (!opt.svm)
                throw ParamError("svm segmentation requested without a trained model");
            return segment_svm(spot, *opt.svm, opt.channel);
        }
        throw ParamError("unknown method");
    }

    inline ComparisonReport compare_methods(const ChannelPair &plate, const SpotGrid &grid, std::span<const Method> methods,
                                            const CompareOptions &opt = {})
    {
        const auto regions = extract_all(plate, grid, opt.margin);
        const int fixed_r = opt.fixed_radius.value_or(median_grid_radius(grid));
        ComparisonReport report;
        for (auto m : methods)
        {
            std::vector<SegmentedSpot> segs;
            segs.reserve(regions.size());
            double f1 = 0.0;
            for (const auto &reg : regions)
            {
                segs.push_back({&reg, segment_spot(reg, m, opt, fixed_r)});
                if (opt.truth_mask)
                    f1 += score_segmentation(segs.back().segmentation.mask, crop(*opt.truth_mask, reg.rect)).f1;
            }
            auto recs = quantify_spots(segs, grid.spec.cols, opt.epsilon);
            auto summary = summarize(m, recs);
            if (opt.truth_mask && !regions.empty())
                summary.f1_mean = f1 / static_cast<double>(regions.size());
            report.summaries.push_back(summary);
            report.records.insert(report.records.end(), recs.begin(), recs.end());
        }
        return report;
    }

} // namespace mcht
