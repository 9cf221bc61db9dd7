#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"

namespace mcht
{

    struct MedianParams
    {
        int window = 3; ///< odd side length of the square window
    };

    /// Sliding-window median with edge-replicated borders.
    inline GrayImage median_filter(const GrayImage &img, const MedianParams &p = {})
    {
        if (p.window < 1 || p.window % 2 == 0)
            throw ParamError("median window must be odd and >= 1, got " + std::to_string(p.window));
        if (p.window > std::min(img.width(), img.height()))
            throw ParamError("median window " + std::to_string(p.window) + " larger than image");
        if (p.window == 1)
            return img;

        const int half = p.window / 2;
        const std::size_t mid = static_cast<std::size_t>(p.window * p.window - 1) / 2;
        std::vector<GrayImage::value_type> out(img.pixels().size());
        std::vector<GrayImage::value_type> buf(static_cast<std::size_t>(p.window) * p.window);
        for (int y = 0; y < img.height(); ++y)
        {
            for (int x = 0; x < img.width(); ++x)
            {
                std::size_t k = 0;
                for (int dy = -half; dy <= half; ++dy)
                    for (int dx = -half; dx <= half; ++dx)
                        buf[k++] = img.clamped(x + dx, y + dy);
                std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(mid), buf.end());
                out[static_cast<std::size_t>(y) * img.width() + x] = buf[mid];
            }
        }
        return GrayImage(img.width(), img.height(), img.bit_depth(), std::move(out));
    }

} // namespace mcht
