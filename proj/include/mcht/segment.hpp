#pragma once

// Per-spot foreground/background segmentation: CHT circle, fixed circle,
// 1-D two-means (KMIS) and a linear max-margin pixel classifier.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "circle.hpp"
#include "error.hpp"
#include "grid.hpp"
#include "image.hpp"
#include "synth.hpp"

namespace mcht
{

    enum class Method
    {
        cht,
        kmeans,
        svm,
        fixed
    };

    inline const char *to_string(Method m) noexcept
    {
        switch (m)
        {
        case Method::cht: return "cht";
        case Method::kmeans: return "kmeans";
        case Method::svm: return "svm";
        case Method::fixed: return "fixed";
        }
        return "?";
    }

    inline Method parse_method(std::string_view s)
    {
        for (auto m : {Method::cht, Method::kmeans, Method::svm, Method::fixed})
            if (s == to_string(m))
                return m;
        throw ParamError("unknown segmentation method '" + std::string(s) + "'");
    }

    struct SpotSegmentation
    {
        BinaryMap mask;
        Method method = Method::cht;
        bool degenerate = false; ///< input carried no usable contrast; mask is all background
    };

    /// Mask of the closed disk of radius r around (cu, cv) in a w x h window.
    inline BinaryMap disk_mask(int w, int h, int cu, int cv, double r)
    {
        BinaryMap m(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                m.set(x, y, in_disk(x, y, cu, cv, r));
        return m;
    }

    inline SpotSegmentation segment_cht(const SpotRegion &spot)
    {
        return {disk_mask(spot.width(), spot.height(), spot.circle.u, spot.circle.v, spot.circle.r), Method::cht, false};
    }

    inline SpotSegmentation segment_fixed_circle(const SpotRegion &spot, int r_fixed)
    {
        if (r_fixed < 0)
            throw ParamError("fixed radius must be non-negative");
        return {disk_mask(spot.width(), spot.height(), spot.circle.u, spot.circle.v, r_fixed), Method::fixed, false};
    }

    // ---------------------------------------------------------------- KMIS

    struct TwoMeansResult
    {
        std::vector<std::uint8_t> signal; ///< 1 = higher-mean cluster
        double signal_mean = 0.0;
        double background_mean = 0.0;
        int iterations = 0;
        std::vector<double> objective; ///< within-cluster sum of squares per labeling, starting with the initial one
        bool degenerate = false;
    };

    namespace kmeans_detail
    {
        struct Means
        {
            double fg = 0.0, bg = 0.0;
        };

        inline Means means_of(std::span<const double> x, const std::vector<std::uint8_t> &fg, Means previous)
        {
            double sf = 0.0, sb = 0.0;
            std::size_t nf = 0, nb = 0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                if (fg[i])
                {
                    sf += x[i];
                    ++nf;
                }
                else
                {
                    sb += x[i];
                    ++nb;
                }
            }
            return {nf ? sf / nf : previous.fg, nb ? sb / nb : previous.bg};
        }

        inline double wcss(std::span<const double> x, const std::vector<std::uint8_t> &fg, Means m)
        {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                const double d = x[i] - (fg[i] ? m.fg : m.bg);
                s += d * d;
            }
            return s;
        }
    } // namespace kmeans_detail

    /// 1-D two-means with min/max initialization: a value starts as foreground when it is strictly
    /// closer to the maximum than to the minimum. Nearest-mean reassignment sends ties to background.
    inline TwoMeansResult two_means(std::span<const double> x, int max_iterations = 100)
    {
        using namespace kmeans_detail;
        TwoMeansResult res;
        res.signal.assign(x.size(), 0);
        if (x.empty())
        {
            res.degenerate = true;
            return res;
        }
        const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
        const double lo = *lo_it, hi = *hi_it;
        if (lo == hi)
        {
            res.degenerate = true;
            res.background_mean = res.signal_mean = lo;
            return res;
        }

        std::vector<std::uint8_t> fg(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            fg[i] = std::abs(x[i] - lo) > std::abs(x[i] - hi) ? 1 : 0;
        Means m = means_of(x, fg, {hi, lo});
        res.objective.push_back(wcss(x, fg, m));

        while (res.iterations < max_iterations)
        {
            ++res.iterations;
            bool changed = false;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                const std::uint8_t next = std::abs(x[i] - m.fg) < std::abs(x[i] - m.bg) ? 1 : 0;
                changed |= next != fg[i];
                fg[i] = next;
            }
            if (!changed)
                break;
            m = means_of(x, fg, m);
            res.objective.push_back(wcss(x, fg, m));
        }

        if (m.fg < m.bg)
        {
            for (auto &f : fg)
                f = f ? 0 : 1;
            std::swap(m.fg, m.bg);
        }
        res.signal = std::move(fg);
        res.signal_mean = m.fg;
        res.background_mean = m.bg;
        return res;
    }

    inline std::vector<double> window_values(const GrayImage &img)
    {
        return {img.pixels().begin(), img.pixels().end()};
    }

    /// KMIS on one channel of the spot window. A constant window yields an all-background mask flagged degenerate.
    inline SpotSegmentation segment_kmeans(const SpotRegion &spot, Channel channel = Channel::red)
    {
        const auto values = window_values(spot.channel(channel));
        const auto km = two_means(values);
        SpotSegmentation seg{BinaryMap(spot.width(), spot.height()), Method::kmeans, km.degenerate};
        if (!km.degenerate)
            seg.mask.mask = km.signal;
        return seg;
    }

    // ---------------------------------------------------------------- margin classifier

    struct LabeledSample
    {
        std::vector<double> features;
        int label = 0; ///< 1 = signal, 0 = background
    };

    /// Linear rule: signal iff w.x - b > 0.
    struct MarginModel
    {
        std::vector<double> w;
        double b = 0.0;

        double decision(std::span<const double> x) const
        {
            if (x.size() != w.size())
                throw ParamError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                                 std::to_string(w.size()));
            double s = -b;
            for (std::size_t i = 0; i < w.size(); ++i)
                s += w[i] * x[i];
            return s;
        }

        bool is_signal(std::span<const double> x) const { return decision(x) > 0.0; }
    };

    struct MarginTrainParams
    {
        double lambda = 1e-4; ///< L2 weight on w; the bias is not regularized
        int epochs = 40;
        std::uint64_t seed = 0x5eed;
    };

    /// Regularized hinge-loss minimization by stochastic subgradient steps with a 1/(lambda t) schedule
    /// and iterate averaging. The visiting order per epoch is a seeded shuffle, so training is reproducible.
    inline MarginModel train_margin_classifier(std::span<const LabeledSample> samples, const MarginTrainParams &p = {})
    {
        if (samples.empty())
            throw TrainingError("empty training set");
        const std::size_t dim = samples.front().features.size();
        bool has_pos = false, has_neg = false;
        for (const auto &s : samples)
        {
            if (s.features.size() != dim)
                throw TrainingError("inconsistent feature dimensions in training set");
            if (s.label != 0 && s.label != 1)
                throw TrainingError("labels must be 0 or 1");
            (s.label ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg)
            throw TrainingError("training set contains a single class");
        if (!(p.lambda > 0.0) || p.epochs < 1)
            throw ParamError("margin training needs lambda > 0 and at least one epoch");

        std::vector<double> w(dim, 0.0), w_avg(dim, 0.0);
        double b = 0.0, b_avg = 0.0;
        std::vector<std::size_t> order(samples.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        SplitRng rng(p.seed);
        // Offset keeps the first steps bounded: eta_1 = 1 / (lambda * (t0 + 1)).
        const double t0 = 1.0 / p.lambda;
        std::uint64_t t = 0;
        for (int epoch = 0; epoch < p.epochs; ++epoch)
        {
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[static_cast<std::size_t>(rng.next() % i)]);
            for (auto idx : order)
            {
                ++t;
                const auto &s = samples[idx];
                const double y = s.label ? 1.0 : -1.0;
                const double eta = 1.0 / (p.lambda * (t0 + static_cast<double>(t)));
                double margin = -b;
                for (std::size_t k = 0; k < dim; ++k)
                    margin += w[k] * s.features[k];
                margin *= y;
                for (std::size_t k = 0; k < dim; ++k)
                    w[k] *= 1.0 - eta * p.lambda;
                if (margin < 1.0)
                {
                    for (std::size_t k = 0; k < dim; ++k)
                        w[k] += eta * y * s.features[k];
                    b -= eta * y;
                }
                const double a = 1.0 / static_cast<double>(t);
                for (std::size_t k = 0; k < dim; ++k)
                    w_avg[k] += a * (w[k] - w_avg[k]);
                b_avg += a * (b - b_avg);
            }
        }
        return {w_avg, b_avg};
    }

    /// Per-pixel features: intensity min-max normalized over the window, and distance from the spot center
    /// divided by the nominal window half-side (r + margin).
    inline std::vector<std::vector<double>> pixel_features(const SpotRegion &spot, Channel channel)
    {
        const auto &img = spot.channel(channel);
        const auto px = img.pixels();
        const auto [lo_it, hi_it] = std::minmax_element(px.begin(), px.end());
        const double lo = *lo_it, range = static_cast<double>(*hi_it) - lo;
        const double half = std::max(1, spot.circle.r + spot.margin);
        std::vector<std::vector<double>> out;
        out.reserve(px.size());
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
            {
                const double v = range > 0.0 ? (img.at(x, y) - lo) / range : 0.0;
                const double d = std::sqrt(static_cast<double>(squared_distance(x, y, spot.circle.u, spot.circle.v)));
                out.push_back({v, d / half});
            }
        return out;
    }

    inline SpotSegmentation segment_svm(const SpotRegion &spot, const MarginModel &model, Channel channel = Channel::red)
    {
        const auto feats = pixel_features(spot, channel);
        SpotSegmentation seg{BinaryMap(spot.width(), spot.height()), Method::svm, false};
        for (std::size_t i = 0; i < feats.size(); ++i)
            seg.mask.mask[i] = model.is_signal(feats[i]) ? 1 : 0;
        return seg;
    }

    /// Labeled pixels of every present spot: features from the window, labels from the true disk.
    inline std::vector<LabeledSample> training_samples(const SyntheticPlate &plate, Channel channel, int margin = 4)
    {
        std::vector<LabeledSample> out;
        for (const auto &t : plate.truth)
        {
            if (!t.circle)
                continue;
            const auto spot = extract_spot(plate.channels, *t.circle, t.row, t.col, margin);
            const auto feats = pixel_features(spot, channel);
            const auto truth = crop(channel == Channel::red ? plate.red_mask : plate.green_mask, spot.rect);
            for (std::size_t i = 0; i < feats.size(); ++i)
                out.push_back({feats[i], truth.mask[i]});
        }
        return out;
    }

    /// Default classifier: trained on `plates` synthetic plates with consecutive seeds.
    inline MarginModel train_on_synthetic(SynthParams base, int plates, Channel channel, int margin = 4,
                                          const MarginTrainParams &tp = {})
    {
        std::vector<LabeledSample> all;
        const std::uint64_t first_seed = base.seed;
        for (int i = 0; i < plates; ++i)
        {
            base.seed = first_seed + static_cast<std::uint64_t>(i);
            const auto samples = training_samples(generate(base), channel, margin);
            all.insert(all.end(), samples.begin(), samples.end());
        }
        return train_margin_classifier(all, tp);
    }

} // namespace mcht
