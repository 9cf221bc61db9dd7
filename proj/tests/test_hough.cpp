#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "mcht/hough.hpp"
#include "mcht/median.hpp"
#include "mcht/synth.hpp"
#include "support.hpp"

using namespace mcht;
namespace ts = testing_support;

namespace
{

    GrayImage shifted(const GrayImage &img, int dx, int dy, std::uint16_t fill)
    {
        GrayImage out(img.width(), img.height(), img.bit_depth());
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
            {
                const int sx = x - dx, sy = y - dy;
                out.set(x, y, img.contains(sx, sy) ? img.at(sx, sy) : fill);
            }
        return out;
    }

    SynthParams small_plate(int rows, int cols, std::uint64_t seed)
    {
        SynthParams p;
        p.rows = rows;
        p.cols = cols;
        p.seed = seed;
        return p;
    }

} // namespace

TEST(Vote, EmptyEdgeMapGivesZeroAccumulator)
{
    const auto acc = vote(EdgeMap(30, 20), ChtParams{});
    EXPECT_EQ(acc.total(), 0);
    EXPECT_TRUE(find_centers(acc, ChtParams{}).empty());
}

TEST(Vote, SingleEdgePixelVotesAgainstGradient)
{
    EdgeMap e(40, 40);
    e.mark(20, 20, 0.0);
    ChtParams p;
    p.r_min = p.r_max = 5;
    p.bidirectional = false;
    const auto acc = vote(e, p);
    EXPECT_EQ(acc.total(), 1);
    EXPECT_EQ(acc.at(15, 20), 1);
}

TEST(Vote, ConservesMassWhenAllVotesLand)
{
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> pos(12, 51);
    std::uniform_real_distribution<double> ang(-3.14159, 3.14159);
    for (int trial = 0; trial < 20; ++trial)
    {
        EdgeMap e(64, 64);
        for (int k = 0; k < 40; ++k)
            e.mark(pos(rng), pos(rng), ang(rng));
        for (bool bi : {false, true})
        {
            ChtParams p;
            p.bidirectional = bi;
            EXPECT_EQ(vote(e, p).total(), static_cast<std::int64_t>(e.count()) * p.band() * (bi ? 2 : 1));
        }
    }
}

TEST(FindCenters, SingleCellIsReturned)
{
    CircleAccumulator acc(20, 20);
    acc.at(7, 11) = 3;
    const auto c = find_centers(acc, ChtParams{});
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].u, 7);
    EXPECT_EQ(c[0].v, 11);
    EXPECT_EQ(c[0].support, 3);
}

TEST(FindCenters, TwoClustersGiveTheirArgmaxes)
{
    CircleAccumulator acc(64, 32);
    auto blob = [&](int cu, int cv, double peak) {
        for (int v = 0; v < 32; ++v)
            for (int u = 0; u < 64; ++u)
                acc.at(u, v) += std::llround(peak * std::exp(-((u - cu) * (u - cu) + (v - cv) * (v - cv)) / 8.0));
    };
    blob(15, 16, 100);
    blob(45, 15, 80);
    ChtParams p;
    p.min_center_separation = 12;
    const auto c = find_centers(acc, p);
    // Oracle: argmax within each half of the array.
    auto argmax = [&](int u0, int u1) {
        Circle best{0, 0, 0, -1};
        for (int v = 0; v < 32; ++v)
            for (int u = u0; u < u1; ++u)
                if (acc.at(u, v) > best.support)
                    best = {u, v, 0, acc.at(u, v)};
        return best;
    };
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c[0], argmax(0, 32));
    EXPECT_EQ(c[1], argmax(32, 64));
}

TEST(FindCenters, SeparationSuppressesWeakerNeighbor)
{
    CircleAccumulator acc(40, 40);
    acc.at(10, 10) = 10;
    acc.at(18, 10) = 9;
    acc.at(30, 30) = 8;
    ChtParams p;
    p.min_center_separation = 12;
    const auto c = find_centers(acc, p);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c[0].u, 10);
    EXPECT_EQ(c[1].u, 30);
}

namespace
{
    ChtParams plain_histogram()
    {
        ChtParams p;
        p.radius_angle_tolerance = std::numbers::pi / 2.0;
        return p;
    }

    void mark_radial(EdgeMap &e, int x, int y, int u, int v)
    {
        e.mark(x, y, std::atan2(double(y - v), double(x - u)));
    }
} // namespace

TEST(EstimateRadius, PerfectCircle)
{
    EdgeMap e(40, 40);
    for (auto [dx, dy] : midpoint_circle(8))
        e.mark(20 + dx, 20 + dy, std::atan2(double(dy), double(dx)));
    EXPECT_EQ(estimate_radius(20, 20, e, ChtParams{}), 8);
    EXPECT_EQ(estimate_radius(20, 20, e, plain_histogram()), 8);
}

TEST(EstimateRadius, ModeWithTiesToSmaller)
{
    // Distances {6, 6, 7, 9} from (20, 20); gradients tangential, so only the plain histogram sees them.
    EdgeMap e(40, 40);
    e.mark(20, 26, 0);
    e.mark(20, 14, 0);
    e.mark(27, 20, 1.5707963);
    e.mark(11, 20, 1.5707963);
    EXPECT_EQ(estimate_radius(20, 20, e, plain_histogram()), 6);
    EXPECT_THROW(estimate_radius(20, 20, e, ChtParams{}), NoSupportError);
    e.mark(20, 13, 0);
    EXPECT_EQ(estimate_radius(20, 20, e, plain_histogram()), 6);
    EdgeMap f(40, 40);
    f.mark(27, 20, 0);
    f.mark(20, 29, 0);
    EXPECT_EQ(estimate_radius(20, 20, f, plain_histogram()), 7);
    EXPECT_THROW(estimate_radius(20, 20, EdgeMap(40, 40), plain_histogram()), NoSupportError);
    EXPECT_THROW(estimate_radius(40, 20, f, plain_histogram()), BoundsError);
}

TEST(EstimateRadius, CountsOnlyGradientConsistentEdges)
{
    // Four radial edges at distance 7 against five tangential ones at distance 9.
    EdgeMap e(40, 40);
    for (auto [x, y] : {std::pair{27, 20}, {13, 20}, {20, 27}, {20, 13}})
        mark_radial(e, x, y, 20, 20);
    for (auto [x, y] : {std::pair{29, 20}, {11, 20}, {20, 29}, {20, 11}, {26, 27}})
        e.mark(x, y, std::atan2(double(y - 20), double(x - 20)) + std::numbers::pi / 2.0);
    EXPECT_EQ(estimate_radius(20, 20, e, ChtParams{}), 7);
    EXPECT_EQ(estimate_radius(20, 20, e, plain_histogram()), 9);
    // Either gradient sign counts: inverted contrast flips every angle by pi.
    EdgeMap g(40, 40);
    for (auto [x, y] : {std::pair{27, 20}, {13, 20}, {20, 27}})
        g.mark(x, y, std::atan2(double(y - 20), double(x - 20)) + std::numbers::pi);
    EXPECT_EQ(estimate_radius(20, 20, g, ChtParams{}), 7);
}

TEST(EstimateRadius, MatchesBruteForceOnNoisyDisks)
{
    std::mt19937_64 rng(32);
    std::uniform_int_distribution<int> rd(6, 10);
    std::normal_distribution<double> noise(0, 15);
    for (int trial = 0; trial < 30; ++trial)
    {
        const int r = rd(rng);
        auto img = ts::disk_image(48, 48, 24, 24, r, 170, 50);
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x)
                img.set(x, y, static_cast<std::uint16_t>(std::clamp(img.at(x, y) + noise(rng), 0.0, 255.0)));
        const auto e = canny(median_filter(img, {3}));
        for (const auto &p : {plain_histogram(), ChtParams{}})
        {
            // Brute force: scan every edge pixel for each candidate radius.
            int best_r = 0;
            std::int64_t best = 0;
            for (int rr = p.r_min; rr <= p.r_max; ++rr)
            {
                std::int64_t s = 0;
                for (const auto &q : e.points())
                {
                    const double d = std::hypot(q.x - 24.0, q.y - 24.0);
                    const double off = std::remainder(q.angle - std::atan2(q.y - 24.0, q.x - 24.0), std::numbers::pi);
                    s += std::lround(d) == rr && std::abs(off) <= p.radius_angle_tolerance;
                }
                if (s > best)
                {
                    best = s;
                    best_r = rr;
                }
            }
            ASSERT_GT(best, 0);
            EXPECT_EQ(estimate_radius(24, 24, e, p), best_r);
            if (p.radius_angle_tolerance == plain_histogram().radius_angle_tolerance)
            {
                std::int64_t ring = 0;
                for (int rr = p.r_min; rr <= p.r_max; ++rr)
                    ring = std::max(ring, ts::ring_support(e, 24, 24, rr));
                EXPECT_EQ(ring, best);
            }
        }
        EXPECT_EQ(estimate_radius(24, 24, e, ChtParams{}), r);
    }
}

TEST(DetectCircles, BlankImageGivesNothing) { EXPECT_TRUE(detect_circles(ts::constant_image(50, 50, 9), {}, {}).empty()); }

TEST(DetectCircles, SingleSyntheticSpotIsTheStrongestCircle)
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
    {
        auto sp = small_plate(1, 1, seed);
        sp.r_lo = sp.r_hi = 7;
        const auto plate = generate(sp);
        const auto &t = *plate.truth[0].circle;
        const auto c = detect_circles(median_filter(plate.channels.red()), {}, {});
        ASSERT_FALSE(c.empty()) << "seed " << seed;
        EXPECT_LE(std::abs(c[0].u - t.u), 1) << "seed " << seed;
        EXPECT_LE(std::abs(c[0].v - t.v), 1) << "seed " << seed;
        EXPECT_LE(std::abs(c[0].r - t.r), 1) << "seed " << seed;
        for (std::size_t i = 1; i < c.size(); ++i)
            EXPECT_LT(c[i].support, c[0].support) << "seed " << seed;
    }
}

namespace
{
    /// Minimum total squared distance when every truth circle takes a distinct detection (bitmask DP).
    std::vector<int> min_cost_assignment(const std::vector<Circle> &truth, const std::vector<Circle> &found)
    {
        const std::size_t n = truth.size(), m = found.size();
        const std::size_t full = std::size_t{1} << m;
        constexpr std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
        // cost[i][mask]: best cost of assigning truth[i..] using detections outside mask.
        std::vector<std::vector<std::int64_t>> cost(n + 1, std::vector<std::int64_t>(full, inf));
        std::fill(cost[n].begin(), cost[n].end(), 0);
        for (std::size_t i = n; i-- > 0;)
            for (std::size_t mask = 0; mask < full; ++mask)
                for (std::size_t j = 0; j < m; ++j)
                    if (!(mask >> j & 1) && cost[i + 1][mask | std::size_t{1} << j] < inf)
                        cost[i][mask] = std::min(cost[i][mask], cost[i + 1][mask | std::size_t{1} << j] +
                                                                    squared_distance(truth[i].u, truth[i].v, found[j].u, found[j].v));
        std::vector<int> pick;
        std::size_t mask = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (!(mask >> j & 1) &&
                    cost[i][mask] == cost[i + 1][mask | std::size_t{1} << j] +
                                         squared_distance(truth[i].u, truth[i].v, found[j].u, found[j].v))
                {
                    pick.push_back(static_cast<int>(j));
                    mask |= std::size_t{1} << j;
                    break;
                }
        return pick;
    }
} // namespace

TEST(DetectCircles, ThreeByThreeGridMatchesTruthOneToOne)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
    {
        const auto plate = generate(small_plate(3, 3, seed));
        const auto truth = plate.truth_circles();
        ASSERT_EQ(truth.size(), 9u);
        const auto found = detect_circles(median_filter(plate.channels.red()), {}, {});
        ASSERT_GE(found.size(), 9u) << "seed " << seed;
        ASSERT_LE(found.size(), 16u) << "seed " << seed;
        const auto pick = min_cost_assignment(truth, found);
        ASSERT_EQ(pick.size(), 9u);
        for (int i = 0; i < 9; ++i)
        {
            const auto &f = found[pick[i]];
            EXPECT_LE(squared_distance(f.u, f.v, truth[i].u, truth[i].v), 4) << "seed " << seed;
            EXPECT_LE(std::abs(f.r - truth[i].r), 1) << "seed " << seed;
        }
        // The nine spots are the nine strongest detections.
        std::vector<int> sorted = pick;
        std::sort(sorted.begin(), sorted.end());
        EXPECT_EQ(sorted.back(), 8) << "seed " << seed;
    }
}

TEST(DetectCircles, TranslationEquivariance)
{
    std::mt19937_64 rng(33);
    std::normal_distribution<double> noise(0, 10);
    auto img = ts::disk_image(80, 80, 38, 37, 8, 180, 40);
    for (int y = 0; y < 80; ++y)
        for (int x = 0; x < 80; ++x)
            img.set(x, y, static_cast<std::uint16_t>(std::clamp(img.at(x, y) + noise(rng), 0.0, 255.0)));
    // Pad with a flat border so the shifted copies keep identical content.
    GrayImage base(80, 80);
    for (int y = 0; y < 80; ++y)
        for (int x = 0; x < 80; ++x)
            base.set(x, y, (x >= 20 && x < 60 && y >= 20 && y < 60) ? img.at(x, y) : 40);
    const auto ref = detect_circles(base, {}, {});
    ASSERT_FALSE(ref.empty());
    for (auto [dx, dy] : {std::pair{3, -2}, {-5, 4}, {1, 1}, {0, -6}})
    {
        const auto moved = detect_circles(shifted(base, dx, dy, 40), {}, {});
        ASSERT_EQ(moved.size(), ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i)
        {
            EXPECT_EQ(moved[i].u, ref[i].u + dx);
            EXPECT_EQ(moved[i].v, ref[i].v + dy);
            EXPECT_EQ(moved[i].r, ref[i].r);
            EXPECT_EQ(moved[i].support, ref[i].support);
        }
    }
}

TEST(DetectCircles, SupportNeverExceedsGlobalMax)
{
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
    {
        auto sp = small_plate(4, 4, seed);
        sp.noise_sigma = 400;
        const auto plate = generate(sp);
        const auto e = canny(median_filter(plate.channels.red()));
        const auto acc = vote(e, ChtParams{});
        for (const auto &c : detect_circles(e, ChtParams{}))
            EXPECT_LE(c.support, acc.max());
    }
}

TEST(DetectCircles, TopCircleMatchesExhaustiveOracle)
{
    std::mt19937_64 rng(34);
    const int trials = 40;
    int agree = 0;
    for (int trial = 0; trial < trials; ++trial)
    {
        const auto scene = ts::random_edge_scene(rng);
        const auto found = detect_circles(scene.edges, ChtParams{});
        const auto best = ts::exhaustive_best_circle(scene.edges, 6, 10);
        agree += !found.empty() && std::abs(found[0].u - best.u) <= 1 && std::abs(found[0].v - best.v) <= 1;
    }
    EXPECT_GE(agree, trials - 1);
}

TEST(ChtParams, Validation)
{
    ChtParams p;
    p.r_min = 0;
    EXPECT_THROW(validate(p), ParamError);
    p = {};
    p.r_max = 5;
    EXPECT_THROW(validate(p), ParamError);
    p = {};
    p.peak_threshold_frac = 0.0;
    EXPECT_THROW(validate(p), ParamError);
    p = {};
    p.min_center_separation = -1.0;
    EXPECT_THROW(validate(p), ParamError);
    p = {};
    p.radius_angle_tolerance = 0.0;
    EXPECT_THROW(validate(p), ParamError);
    p.radius_angle_tolerance = 1.6;
    EXPECT_THROW(validate(p), ParamError);
}
