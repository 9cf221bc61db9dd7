#pragma once

// PNG output for masks and overlays, backed by libpng.

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "circle.hpp"
#include "error.hpp"
#include "image.hpp"
#include "io.hpp"

namespace mcht
{

    /// 8-bit raster with 1 (gray) or 3 (RGB) interleaved channels.
    struct Raster8
    {
        int width = 0;
        int height = 0;
        int channels = 1;
        std::vector<std::uint8_t> data;

        friend bool operator==(const Raster8 &, const Raster8 &) = default;
    };

    namespace png_detail
    {
        inline void on_error(png_structp png, png_const_charp msg)
        {
            auto *buf = static_cast<std::string *>(png_get_error_ptr(png));
            if (buf)
                *buf = msg;
            png_longjmp(png, 1);
        }

        inline void on_warning(png_structp, png_const_charp) {}

        inline void append(png_structp png, png_bytep data, png_size_t n)
        {
            auto *out = static_cast<std::vector<std::uint8_t> *>(png_get_io_ptr(png));
            out->insert(out->end(), data, data + n);
        }

        inline void flush(png_structp) {}

        struct ReadSource
        {
            std::span<const std::uint8_t> bytes;
            std::size_t pos = 0;
        };

        inline void consume(png_structp png, png_bytep data, png_size_t n)
        {
            auto *src = static_cast<ReadSource *>(png_get_io_ptr(png));
            if (src->pos + n > src->bytes.size())
                png_error(png, "unexpected end of PNG data");
            std::copy_n(src->bytes.data() + src->pos, n, data);
            src->pos += n;
        }
    } // namespace png_detail

    inline std::vector<std::uint8_t> encode_png(const Raster8 &img)
    {
        if (img.channels != 1 && img.channels != 3)
            throw ParamError("PNG encoder supports 1 or 3 channels");
        if (img.data.size() != static_cast<std::size_t>(img.width) * img.height * img.channels || img.width < 1 || img.height < 1)
            throw ParamError("raster size mismatch");

        std::string err;
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_detail::on_error, png_detail::on_warning);
        if (!png)
            throw IoError("png_create_write_struct failed");
        png_infop info = png_create_info_struct(png);
        std::vector<std::uint8_t> out;
        std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
        if (setjmp(png_jmpbuf(png)))
        {
            png_destroy_write_struct(&png, &info);
            throw IoError("PNG encode failed: " + err);
        }
        png_set_write_fn(png, &out, png_detail::append, png_detail::flush);
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                     img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
        for (int y = 0; y < img.height; ++y)
            rows[y] = const_cast<png_bytep>(img.data.data() + stride * y);
        png_set_rows(png, info, rows.data());
        png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
        png_destroy_write_struct(&png, &info);
        return out;
    }

    /// Decode to 8-bit gray or RGB; palette, alpha and 16-bit inputs are converted.
    inline Raster8 decode_png(std::span<const std::uint8_t> bytes)
    {
        if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
            throw ParseError("not a PNG file", 0);

        std::string err;
        png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_detail::on_error, png_detail::on_warning);
        if (!png)
            throw IoError("png_create_read_struct failed");
        png_infop info = png_create_info_struct(png);
        png_detail::ReadSource src{bytes, 0};
        Raster8 out;
        if (setjmp(png_jmpbuf(png)))
        {
            png_destroy_read_struct(&png, &info, nullptr);
            throw ParseError("PNG decode failed: " + err, src.pos);
        }
        png_set_read_fn(png, &src, png_detail::consume);
        png_read_png(png, info,
                     PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND, nullptr);
        out.width = static_cast<int>(png_get_image_width(png, info));
        out.height = static_cast<int>(png_get_image_height(png, info));
        out.channels = static_cast<int>(png_get_channels(png, info));
        png_bytepp rows = png_get_rows(png, info);
        const std::size_t stride = static_cast<std::size_t>(out.width) * out.channels;
        out.data.reserve(stride * out.height);
        for (int y = 0; y < out.height; ++y)
            out.data.insert(out.data.end(), rows[y], rows[y] + stride);
        png_destroy_read_struct(&png, &info, nullptr);
        return out;
    }

    inline Raster8 read_png(const std::filesystem::path &path)
    {
        const auto bytes = read_file_bytes(path);
        try
        {
            return decode_png(bytes);
        }
        catch (const ParseError &e)
        {
            throw ParseError(path.string() + ": " + e.what(), e.offset());
        }
    }

    inline void write_png(const Raster8 &img, const std::filesystem::path &path)
    {
        write_file_atomic(path, encode_png(img));
    }

    /// Masks are stored as 8-bit gray: signal = 255, background = 0.
    inline void write_mask_png(const BinaryMap &m, const std::filesystem::path &path)
    {
        Raster8 r{m.width, m.height, 1, {}};
        r.data.reserve(m.mask.size());
        for (auto v : m.mask)
            r.data.push_back(v ? 255 : 0);
        write_png(r, path);
    }

    inline BinaryMap read_mask_png(const std::filesystem::path &path)
    {
        const Raster8 r = read_png(path);
        if (r.channels != 1)
            throw ParseError(path.string() + ": mask PNG must be single-channel gray", 0);
        BinaryMap m(r.width, r.height);
        for (std::size_t i = 0; i < r.data.size(); ++i)
            m.mask[i] = r.data[i] >= 128 ? 1 : 0;
        return m;
    }

    /// Gray image replicated into RGB, scaled to 8 bits.
    inline Raster8 to_rgb(const GrayImage &img)
    {
        Raster8 out{img.width(), img.height(), 3, {}};
        out.data.reserve(img.pixels().size() * 3);
        const int shift = img.bit_depth() - 8;
        for (auto v : img.pixels())
        {
            const auto g = static_cast<std::uint8_t>(v >> shift);
            out.data.insert(out.data.end(), {g, g, g});
        }
        return out;
    }

    /// Draw 1-pixel circle outlines in pure green; off-image points are clipped.
    inline Raster8 render_overlay(const GrayImage &img, std::span<const Circle> circles)
    {
        Raster8 out = to_rgb(img);
        for (const auto &c : circles)
        {
            for (auto [dx, dy] : midpoint_circle(c.r))
            {
                const int x = c.u + dx, y = c.v + dy;
                if (!img.contains(x, y))
                    continue;
                auto *px = &out.data[(static_cast<std::size_t>(y) * out.width + x) * 3];
                px[0] = 0;
                px[1] = 255;
                px[2] = 0;
            }
        }
        return out;
    }

    inline void overlay_circles(const GrayImage &img, std::span<const Circle> circles, const std::filesystem::path &path)
    {
        write_png(render_overlay(img, circles), path);
    }

} // namespace mcht
