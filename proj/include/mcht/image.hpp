#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace mcht
{

    /// Single-channel raster, row-major, 8 or 16 bits per pixel.
    class GrayImage
    {
    public:
        using value_type = std::uint16_t;

        GrayImage() = default;

        /// Zero-filled image.
        GrayImage(int width, int height, int bit_depth = 8)
            : GrayImage(width, height, bit_depth, std::vector<value_type>(checked_area(width, height), 0)) {}

        GrayImage(int width, int height, int bit_depth, std::vector<value_type> pixels)
            : width_(width), height_(height), bit_depth_(bit_depth), pixels_(std::move(pixels))
        {
            if (bit_depth != 8 && bit_depth != 16)
                throw ParamError("bit depth must be 8 or 16, got " + std::to_string(bit_depth));
            if (pixels_.size() != checked_area(width, height))
                throw ParamError("pixel count " + std::to_string(pixels_.size()) + " does not match " +
                                 std::to_string(width) + "x" + std::to_string(height));
            const auto limit = max_value();
            for (auto v : pixels_)
                if (v > limit)
                    throw ParamError("intensity " + std::to_string(v) + " exceeds " + std::to_string(bit_depth) + "-bit range");
        }

        int width() const noexcept { return width_; }
        int height() const noexcept { return height_; }
        int bit_depth() const noexcept { return bit_depth_; }
        std::uint32_t max_value() const noexcept { return (1u << bit_depth_) - 1u; }
        bool empty() const noexcept { return pixels_.empty(); }

        value_type at(int x, int y) const { return pixels_[index(x, y)]; }

        /// Pixel with coordinates clamped into the image (edge replication).
        value_type clamped(int x, int y) const noexcept
        {
            x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
            y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
            return pixels_[static_cast<std::size_t>(y) * width_ + x];
        }

        bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

        std::span<const value_type> pixels() const noexcept { return pixels_; }

        /// Builder-side mutation; callers own freshly constructed images only.
        void set(int x, int y, value_type v)
        {
            if (v > max_value())
                throw ParamError("intensity out of range");
            pixels_[index(x, y)] = v;
        }

        friend bool operator==(const GrayImage &, const GrayImage &) = default;

    private:
        static std::size_t checked_area(int w, int h)
        {
            if (w < 0 || h < 0)
                throw ParamError("negative image dimensions");
            return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
        }

        std::size_t index(int x, int y) const
        {
            if (!contains(x, y))
                throw BoundsError("pixel (" + std::to_string(x) + "," + std::to_string(y) + ") outside " +
                                  std::to_string(width_) + "x" + std::to_string(height_) + " image");
            return static_cast<std::size_t>(y) * width_ + x;
        }

        int width_ = 0;
        int height_ = 0;
        int bit_depth_ = 8;
        std::vector<value_type> pixels_;
    };

    struct Rect
    {
        int x0 = 0;
        int y0 = 0;
        int w = 1;
        int h = 1;

        friend bool operator==(const Rect &, const Rect &) = default;
    };

    /// Rect `inner`, given relative to `outer`, expressed in `outer`'s parent frame.
    inline Rect compose(const Rect &outer, const Rect &inner) noexcept
    {
        return {outer.x0 + inner.x0, outer.y0 + inner.y0, inner.w, inner.h};
    }

    inline bool fits(const Rect &r, int width, int height) noexcept
    {
        return r.w >= 1 && r.h >= 1 && r.x0 >= 0 && r.y0 >= 0 && r.x0 + r.w <= width && r.y0 + r.h <= height;
    }

    inline GrayImage crop(const GrayImage &img, const Rect &r)
    {
        if (!fits(r, img.width(), img.height()))
            throw BoundsError("crop rect {" + std::to_string(r.x0) + "," + std::to_string(r.y0) + "," + std::to_string(r.w) +
                              "," + std::to_string(r.h) + "} outside " + std::to_string(img.width()) + "x" +
                              std::to_string(img.height()) + " image");
        std::vector<GrayImage::value_type> out;
        out.reserve(static_cast<std::size_t>(r.w) * r.h);
        const auto src = img.pixels();
        for (int j = 0; j < r.h; ++j)
        {
            const auto row = src.subspan(static_cast<std::size_t>(r.y0 + j) * img.width() + r.x0, r.w);
            out.insert(out.end(), row.begin(), row.end());
        }
        return GrayImage(r.w, r.h, img.bit_depth(), std::move(out));
    }

    /// Red and green scans of the same slide.
    class ChannelPair
    {
    public:
        ChannelPair() = default;

        ChannelPair(GrayImage red, GrayImage green) : red_(std::move(red)), green_(std::move(green))
        {
            if (red_.width() != green_.width() || red_.height() != green_.height() || red_.bit_depth() != green_.bit_depth())
                throw ParamError("red and green channels differ in size or bit depth");
        }

        const GrayImage &red() const noexcept { return red_; }
        const GrayImage &green() const noexcept { return green_; }
        int width() const noexcept { return red_.width(); }
        int height() const noexcept { return red_.height(); }

    private:
        GrayImage red_;
        GrayImage green_;
    };

    enum class Channel
    {
        red,
        green
    };

    inline const GrayImage &select(const ChannelPair &pair, Channel c) noexcept
    {
        return c == Channel::red ? pair.red() : pair.green();
    }

    /// Signal/background raster: 1 = signal, 0 = background.
    struct BinaryMap
    {
        int width = 0;
        int height = 0;
        std::vector<std::uint8_t> mask;

        BinaryMap() = default;
        BinaryMap(int w, int h) : width(w), height(h), mask(static_cast<std::size_t>(w) * h, 0) {}

        std::uint8_t at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x]; }
        void set(int x, int y, bool on) { mask[static_cast<std::size_t>(y) * width + x] = on ? 1 : 0; }

        std::size_t count() const noexcept
        {
            std::size_t n = 0;
            for (auto m : mask)
                n += m;
            return n;
        }

        friend bool operator==(const BinaryMap &, const BinaryMap &) = default;
    };

    inline BinaryMap crop(const BinaryMap &m, const Rect &r)
    {
        if (!fits(r, m.width, m.height))
            throw BoundsError("mask crop rect outside map");
        BinaryMap out(r.w, r.h);
        for (int j = 0; j < r.h; ++j)
            for (int i = 0; i < r.w; ++i)
                out.set(i, j, m.at(r.x0 + i, r.y0 + j) != 0);
        return out;
    }

} // namespace mcht
