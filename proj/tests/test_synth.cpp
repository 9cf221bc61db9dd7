#include <gtest/gtest.h>

#include <cmath>

#include "mcht/pipeline.hpp"
#include "mcht/synth.hpp"
#include "support.hpp"

using namespace mcht;
namespace ts = testing_support;

namespace
{

    SynthParams small(int rows, int cols, std::uint64_t seed)
    {
        SynthParams p;
        p.rows = rows;
        p.cols = cols;
        p.seed = seed;
        return p;
    }

    /// Mean per-spot F1 of CHT segmentation after full-plate detection, against the true masks.
    double detect_segment_f1(const SyntheticPlate &plate)
    {
        PipelineParams pp;
        pp.grid = {plate.params.rows, plate.params.cols};
        const auto det = detect_plate(plate.channels, pp);
        const std::vector<Method> m{Method::cht};
        CompareOptions opt;
        opt.truth_mask = &plate.red_mask;
        return *compare_methods(plate.channels, det.grid, m, opt).summaries[0].f1_mean;
    }

} // namespace

TEST(Generate, SameSeedIsBitIdentical)
{
    const auto a = generate(small(3, 4, 77)), b = generate(small(3, 4, 77));
    EXPECT_EQ(a.channels.red(), b.channels.red());
    EXPECT_EQ(a.channels.green(), b.channels.green());
    EXPECT_EQ(a.red_mask, b.red_mask);
    EXPECT_EQ(truth_csv(a), truth_csv(b));
    const auto c = generate(small(3, 4, 78));
    EXPECT_NE(a.channels.red(), c.channels.red());
}

TEST(Generate, FullDropoutGivesBackgroundOnly)
{
    auto p = small(3, 3, 5);
    p.dropout = 1.0;
    p.noise_sigma = 0.0;
    const auto plate = generate(p);
    EXPECT_TRUE(plate.truth_circles().empty());
    EXPECT_EQ(plate.channels.red(), ts::constant_image(p.width(), p.height(), p.background, 16));
    EXPECT_EQ(plate.channels.green(), plate.channels.red());
    EXPECT_EQ(std::count(plate.red_mask.mask.begin(), plate.red_mask.mask.end(), 1), 0);
}

TEST(Generate, NoiselessPlateIsExactDiskRaster)
{
    auto p = small(2, 2, 6);
    p.noise_sigma = 0.0;
    const auto plate = generate(p);
    ASSERT_EQ(plate.truth.size(), 4u);
    for (int y = 0; y < p.height(); ++y)
        for (int x = 0; x < p.width(); ++x)
        {
            int red = p.background, green = p.background;
            bool inside = false;
            for (const auto &t : plate.truth)
            {
                const auto &c = *t.circle;
                if ((x - c.u) * (x - c.u) + (y - c.v) * (y - c.v) <= c.r * c.r)
                {
                    red = t.red_fg;
                    green = t.green_fg;
                    inside = true;
                }
            }
            ASSERT_EQ(plate.channels.red().at(x, y), red);
            ASSERT_EQ(plate.channels.green().at(x, y), green);
            ASSERT_EQ(plate.red_mask.at(x, y), inside);
        }
    for (const auto &t : plate.truth)
    {
        EXPECT_DOUBLE_EQ(t.expression, std::log2(double(t.red_fg - p.background) / (t.green_fg - p.background)));
        const auto &c = *t.circle;
        EXPECT_LE(std::abs(c.u - (t.col * p.pitch + p.pitch / 2)), p.jitter);
        EXPECT_LE(std::abs(c.v - (t.row * p.pitch + p.pitch / 2)), p.jitter);
        EXPECT_GE(c.r, p.r_lo);
        EXPECT_LE(c.r, p.r_hi);
    }
}

TEST(Generate, NoiselessStatsAreExact)
{
    auto p = small(3, 3, 7);
    p.noise_sigma = 0.0;
    const auto plate = generate(p);
    for (const auto &t : plate.truth)
    {
        const auto s = extract_spot(plate.channels, *t.circle, t.row, t.col);
        const auto seg = segment_fixed_circle(s, t.circle->r);
        const auto r = spot_stats(s, seg, Channel::red), g = spot_stats(s, seg, Channel::green);
        EXPECT_EQ(r.f_mean, t.red_fg);
        EXPECT_EQ(g.f_mean, t.green_fg);
        EXPECT_EQ(r.b_mean, p.background);
        EXPECT_EQ(r.b_sd, 0.0);
        EXPECT_EQ(score_segmentation(seg.mask, crop(plate.red_mask, s.rect)).f1, 1.0);
    }
}

TEST(Generate, GaussianProfilePeaksAtCenter)
{
    auto p = small(2, 2, 8);
    p.noise_sigma = 0.0;
    p.profile = SpotProfile::gaussian;
    const auto plate = generate(p);
    for (const auto &t : plate.truth)
    {
        const auto &c = *t.circle;
        EXPECT_EQ(plate.channels.red().at(c.u, c.v), t.red_fg);
        EXPECT_LT(plate.channels.red().at(c.u + c.r, c.v), t.red_fg);
        EXPECT_GT(plate.channels.red().at(c.u + c.r, c.v), p.background);
        EXPECT_EQ(plate.channels.red().at(c.u + c.r + 1, c.v), p.background);
        // Truth expression uses the disk means of the noiseless dome.
        double sr = 0, sg = 0;
        int n = 0;
        for (int y = c.v - c.r; y <= c.v + c.r; ++y)
            for (int x = c.u - c.r; x <= c.u + c.r; ++x)
                if (in_disk(x, y, c.u, c.v, c.r))
                {
                    const double e = std::exp(-double(squared_distance(x, y, c.u, c.v)) / (2.0 * c.r * c.r));
                    sr += (t.red_fg - p.background) * e;
                    sg += (t.green_fg - p.background) * e;
                    ++n;
                }
        EXPECT_NEAR(t.expression, std::log2(sr / sg), 1e-12);
    }
}

TEST(Generate, RejectsCollidingGeometry)
{
    auto p = small(2, 2, 1);
    p.pitch = 2 * p.r_hi + 2 * p.jitter;
    EXPECT_THROW(generate(p), ParamError);
    p = small(2, 2, 1);
    p.r_lo = 9;
    p.r_hi = 8;
    EXPECT_THROW(generate(p), ParamError);
    p = small(2, 2, 1);
    p.dropout = 1.5;
    EXPECT_THROW(generate(p), ParamError);
    p = small(2, 2, 1);
    p.bit_depth = 8;
    EXPECT_THROW(generate(p), ParamError);
}

TEST(ScoreSegmentation, IdentityAndComplement)
{
    const auto truth = segment_cht(extract_spot(ChannelPair(ts::constant_image(40, 40, 1), ts::constant_image(40, 40, 1)),
                                                Circle{20, 20, 7, 0}, 0, 0, 4))
                           .mask;
    const auto same = score_segmentation(truth, truth);
    EXPECT_EQ(same.f1, 1.0);
    EXPECT_EQ(same.accuracy, 1.0);
    BinaryMap comp = truth;
    for (auto &m : comp.mask)
        m = !m;
    EXPECT_EQ(score_segmentation(comp, truth).precision, 0.0);
    EXPECT_EQ(score_segmentation(comp, truth).accuracy, 0.0);
    EXPECT_EQ(score_segmentation(BinaryMap(5, 5), BinaryMap(5, 5)).f1, 1.0);
    EXPECT_THROW(score_segmentation(BinaryMap(5, 5), BinaryMap(5, 4)), ParamError);
}

TEST(ScoreSegmentation, OnePixelDilation)
{
    BinaryMap truth(23, 23), dilated(23, 23);
    for (int y = 0; y < 23; ++y)
        for (int x = 0; x < 23; ++x)
        {
            truth.set(x, y, in_disk(x, y, 11, 11, 7));
            dilated.set(x, y, in_disk(x, y, 11, 11, 8));
        }
    const auto s = score_segmentation(dilated, truth);
    EXPECT_EQ(s.recall, 1.0);
    EXPECT_EQ(ts::disk_count(8), 197);
    EXPECT_DOUBLE_EQ(s.precision, double(ts::disk_count(7)) / ts::disk_count(8));
}

TEST(Generate, DetectionDegradesMonotonicallyWithNoise)
{
    double prev = 2.0;
    for (double sigma : {0.0, 150.0, 300.0, 450.0, 600.0})
    {
        double f1 = 0;
        for (std::uint64_t seed = 1; seed <= 3; ++seed)
        {
            auto p = small(6, 6, seed);
            p.noise_sigma = sigma;
            p.fg_lo = 1500;
            p.fg_hi = 2500;
            f1 += detect_segment_f1(generate(p));
        }
        f1 /= 3;
        EXPECT_LE(f1, prev) << "sigma " << sigma;
        prev = f1;
    }
}
