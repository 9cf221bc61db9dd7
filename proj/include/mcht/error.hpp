#pragma once

#include <stdexcept>
#include <string>

namespace mcht
{

    /// Base of every error raised by the library.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Malformed input file; the message names the byte offset.
    class ParseError : public Error
    {
    public:
        ParseError(const std::string &what, std::size_t offset)
            : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

        std::size_t offset() const noexcept { return offset_; }

    private:
        std::size_t offset_;
    };

    /// Well-formed input using a feature outside the supported subset.
    class UnsupportedError : public Error
    {
    public:
        using Error::Error;
    };

    class BoundsError : public Error
    {
    public:
        using Error::Error;
    };

    class ParamError : public Error
    {
    public:
        using Error::Error;
    };

    class IoError : public Error
    {
    public:
        using Error::Error;
    };

    /// Radius estimation found no edge pixel inside the radius band.
    class NoSupportError : public Error
    {
    public:
        using Error::Error;
    };

    /// Too few circles to address the grid.
    class AddressingError : public Error
    {
    public:
        using Error::Error;
    };

    class EmptyClassError : public Error
    {
    public:
        using Error::Error;
    };

    class TrainingError : public Error
    {
    public:
        using Error::Error;
    };

    /// Quality score undefined for the given statistics.
    class DegenerateError : public Error
    {
    public:
        using Error::Error;
    };

} // namespace mcht
