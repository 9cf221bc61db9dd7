#pragma once

// Baseline TIFF subset: one IFD, uncompressed strips, one gray sample per
// pixel, 8 or 16 bits, either byte order.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "io.hpp"

namespace mcht
{

    enum class ByteOrder
    {
        little,
        big
    };

    namespace tiff_detail
    {
        enum Tag : std::uint16_t
        {
            image_width = 256,
            image_length = 257,
            bits_per_sample = 258,
            compression = 259,
            photometric = 262,
            strip_offsets = 273,
            samples_per_pixel = 277,
            rows_per_strip = 278,
            strip_byte_counts = 279,
            planar_config = 284,
            tile_width = 322,
            tile_length = 323,
            tile_offsets = 324,
            tile_byte_counts = 325,
            sample_format = 339,
        };

        enum FieldType : std::uint16_t
        {
            type_byte = 1,
            type_ascii = 2,
            type_short = 3,
            type_long = 4,
            type_rational = 5,
        };

        inline std::size_t type_size(std::uint16_t type)
        {
            switch (type)
            {
            case 1: case 2: case 6: case 7: return 1;
            case 3: case 8: return 2;
            case 4: case 9: case 11: return 4;
            case 5: case 10: case 12: return 8;
            default: return 0;
            }
        }

        class Reader
        {
        public:
            Reader(std::span<const std::uint8_t> bytes, ByteOrder order) : bytes_(bytes), order_(order) {}

            std::uint16_t u16(std::size_t off) const
            {
                need(off, 2);
                const std::uint16_t a = bytes_[off], b = bytes_[off + 1];
                return order_ == ByteOrder::little ? static_cast<std::uint16_t>(a | (b << 8))
                                                   : static_cast<std::uint16_t>((a << 8) | b);
            }

            std::uint32_t u32(std::size_t off) const
            {
                need(off, 4);
                std::uint32_t v = 0;
                for (int i = 0; i < 4; ++i)
                {
                    const std::uint32_t b = bytes_[off + i];
                    v |= order_ == ByteOrder::little ? b << (8 * i) : b << (8 * (3 - i));
                }
                return v;
            }

            void need(std::size_t off, std::size_t n) const
            {
                if (off > bytes_.size() || n > bytes_.size() - off)
                    throw ParseError("truncated TIFF: need " + std::to_string(n) + " bytes", off);
            }

        private:
            std::span<const std::uint8_t> bytes_;
            ByteOrder order_;
        };

        struct Entry
        {
            std::uint16_t type = 0;
            std::uint32_t count = 0;
            std::size_t entry_offset = 0;
            std::vector<std::uint32_t> values;
        };

        inline void put16(std::vector<std::uint8_t> &out, std::uint16_t v, ByteOrder o)
        {
            if (o == ByteOrder::little)
                out.insert(out.end(), {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8)});
            else
                out.insert(out.end(), {static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)});
        }

        inline void put32(std::vector<std::uint8_t> &out, std::uint32_t v, ByteOrder o)
        {
            if (o == ByteOrder::little)
                for (int i = 0; i < 4; ++i)
                    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
            else
                for (int i = 3; i >= 0; --i)
                    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    } // namespace tiff_detail

    /// Decode an in-memory TIFF.
    inline GrayImage decode_gray_tiff(std::span<const std::uint8_t> bytes)
    {
        using namespace tiff_detail;
        if (bytes.size() < 8)
            throw ParseError("file too short for a TIFF header", bytes.size());

        ByteOrder order;
        if (bytes[0] == 'I' && bytes[1] == 'I')
            order = ByteOrder::little;
        else if (bytes[0] == 'M' && bytes[1] == 'M')
            order = ByteOrder::big;
        else
            throw ParseError("bad byte-order mark", 0);

        const Reader rd(bytes, order);
        if (rd.u16(2) != 42)
            throw ParseError("bad TIFF magic number", 2);

        const std::size_t ifd = rd.u32(4);
        if (ifd < 8)
            throw ParseError("IFD offset points into header", 4);
        const std::uint16_t n_entries = rd.u16(ifd);
        rd.need(ifd + 2, std::size_t{12} * n_entries);

        std::map<std::uint16_t, Entry> tags;
        for (std::uint16_t i = 0; i < n_entries; ++i)
        {
            const std::size_t e = ifd + 2 + std::size_t{12} * i;
            Entry entry;
            const std::uint16_t tag = rd.u16(e);
            entry.type = rd.u16(e + 2);
            entry.count = rd.u32(e + 4);
            entry.entry_offset = e;
            const std::size_t size = type_size(entry.type);
            if (entry.type == type_short || entry.type == type_long || entry.type == type_byte)
            {
                const std::size_t total = size * entry.count;
                const std::size_t data = total <= 4 ? e + 8 : rd.u32(e + 8);
                rd.need(data, total);
                entry.values.reserve(entry.count);
                for (std::uint32_t k = 0; k < entry.count; ++k)
                {
                    const std::size_t at = data + size * k;
                    entry.values.push_back(entry.type == type_short  ? rd.u16(at)
                                           : entry.type == type_long ? rd.u32(at)
                                                                     : bytes[at]);
                }
            }
            else if (size == 0)
            {
                throw ParseError("unknown field type " + std::to_string(entry.type) + " for tag " + std::to_string(tag), e + 2);
            }
            tags[tag] = std::move(entry);
        }

        auto scalar = [&](std::uint16_t tag, std::optional<std::uint32_t> fallback) -> std::uint32_t {
            const auto it = tags.find(tag);
            if (it == tags.end() || it->second.values.empty())
            {
                if (fallback)
                    return *fallback;
                throw ParseError("missing required tag " + std::to_string(tag), ifd);
            }
            return it->second.values.front();
        };

        for (auto t : {tile_width, tile_length, tile_offsets, tile_byte_counts})
            if (tags.count(t))
                throw UnsupportedError("unsupported TIFF feature: tiled layout (tag " + std::to_string(t) + ")");

        const std::uint32_t compression_v = scalar(compression, 1u);
        if (compression_v != 1)
            throw UnsupportedError("unsupported TIFF Compression (tag 259) = " + std::to_string(compression_v));
        const std::uint32_t photometric_v = scalar(photometric, std::nullopt);
        if (photometric_v > 1)
            throw UnsupportedError("unsupported TIFF PhotometricInterpretation (tag 262) = " + std::to_string(photometric_v));
        const std::uint32_t spp = scalar(samples_per_pixel, 1u);
        if (spp != 1)
            throw UnsupportedError("unsupported TIFF SamplesPerPixel (tag 277) = " + std::to_string(spp));
        const std::uint32_t bits = scalar(bits_per_sample, 1u);
        if (bits != 8 && bits != 16)
            throw UnsupportedError("unsupported TIFF BitsPerSample (tag 258) = " + std::to_string(bits));
        const std::uint32_t fmt = scalar(sample_format, 1u);
        if (fmt != 1)
            throw UnsupportedError("unsupported TIFF SampleFormat (tag 339) = " + std::to_string(fmt));

        const std::uint32_t width = scalar(image_width, std::nullopt);
        const std::uint32_t height = scalar(image_length, std::nullopt);
        if (width == 0 || height == 0 || width > (1u << 16) || height > (1u << 16))
            throw ParseError("implausible image dimensions " + std::to_string(width) + "x" + std::to_string(height),
                             tags[image_width].entry_offset);
        const std::uint32_t rps = std::min(scalar(Tag::rows_per_strip, height), height);
        if (rps == 0)
            throw ParseError("RowsPerStrip is zero", tags[Tag::rows_per_strip].entry_offset);

        const auto offsets_it = tags.find(strip_offsets);
        if (offsets_it == tags.end())
            throw ParseError("missing required tag 273 (StripOffsets)", ifd);
        const auto &offsets = offsets_it->second.values;
        const std::size_t n_strips = (height + rps - 1) / rps;
        if (offsets.size() != n_strips)
            throw ParseError("StripOffsets has " + std::to_string(offsets.size()) + " entries, expected " + std::to_string(n_strips),
                             offsets_it->second.entry_offset);

        const std::size_t bpp = bits / 8;
        const std::size_t row_bytes = width * bpp;
        std::vector<GrayImage::value_type> pixels;
        pixels.reserve(static_cast<std::size_t>(width) * height);
        for (std::size_t s = 0; s < n_strips; ++s)
        {
            const std::size_t rows = std::min<std::size_t>(rps, height - s * rps);
            const std::size_t base = offsets[s];
            rd.need(base, rows * row_bytes);
            for (std::size_t k = 0; k < rows * width; ++k)
                pixels.push_back(bpp == 1 ? bytes[base + k] : rd.u16(base + 2 * k));
        }
        return GrayImage(static_cast<int>(width), static_cast<int>(height), static_cast<int>(bits), std::move(pixels));
    }

    inline GrayImage load_gray_tiff(const std::filesystem::path &path)
    {
        const auto bytes = read_file_bytes(path);
        try
        {
            return decode_gray_tiff(bytes);
        }
        catch (const ParseError &e)
        {
            throw ParseError(path.string() + ": " + e.what(), e.offset());
        }
        catch (const UnsupportedError &e)
        {
            throw UnsupportedError(path.string() + ": " + e.what());
        }
    }

    /// Single-strip, BlackIsZero encoding of `img`.
    inline std::vector<std::uint8_t> encode_gray_tiff(const GrayImage &img, ByteOrder order = ByteOrder::little)
    {
        using namespace tiff_detail;
        const std::uint32_t bpp = static_cast<std::uint32_t>(img.bit_depth() / 8);
        const std::uint32_t data_bytes = static_cast<std::uint32_t>(img.pixels().size()) * bpp;
        constexpr std::uint16_t n_entries = 9;
        const std::uint32_t ifd_offset = 8;
        const std::uint32_t data_offset = ifd_offset + 2 + 12 * n_entries + 4;

        std::vector<std::uint8_t> out;
        out.reserve(data_offset + data_bytes);
        out.push_back(order == ByteOrder::little ? 'I' : 'M');
        out.push_back(order == ByteOrder::little ? 'I' : 'M');
        put16(out, 42, order);
        put32(out, ifd_offset, order);
        put16(out, n_entries, order);

        auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t value) {
            put16(out, tag, order);
            put16(out, type, order);
            put32(out, 1, order);
            if (type == type_short)
            {
                put16(out, static_cast<std::uint16_t>(value), order);
                put16(out, 0, order);
            }
            else
            {
                put32(out, value, order);
            }
        };
        entry(image_width, type_long, static_cast<std::uint32_t>(img.width()));
        entry(image_length, type_long, static_cast<std::uint32_t>(img.height()));
        entry(bits_per_sample, type_short, static_cast<std::uint32_t>(img.bit_depth()));
        entry(compression, type_short, 1);
        entry(photometric, type_short, 1);
        entry(strip_offsets, type_long, data_offset);
        entry(samples_per_pixel, type_short, 1);
        entry(rows_per_strip, type_long, static_cast<std::uint32_t>(img.height()));
        entry(strip_byte_counts, type_long, data_bytes);
        put32(out, 0, order);

        for (auto v : img.pixels())
        {
            if (bpp == 1)
                out.push_back(static_cast<std::uint8_t>(v));
            else
                put16(out, v, order);
        }
        return out;
    }

    inline void write_gray_tiff(const GrayImage &img, const std::filesystem::path &path, ByteOrder order = ByteOrder::little)
    {
        write_file_atomic(path, encode_gray_tiff(img, order));
    }

} // namespace mcht
