#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace mcht
{

    inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IoError("cannot open " + path.string());
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    /// Write bytes to `path` through a temporary file and rename, so readers never see a partial file.
    inline void write_file_atomic(const std::filesystem::path &path, std::span<const std::uint8_t> bytes)
    {
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
                throw IoError("cannot open " + tmp.string() + " for writing");
            out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            if (!out)
                throw IoError("write failed: " + tmp.string());
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec)
            throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }

    inline void write_text_atomic(const std::filesystem::path &path, std::string_view text)
    {
        write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t *>(text.data()), text.size()));
    }

} // namespace mcht
