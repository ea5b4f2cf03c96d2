#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mfuse::binary {

template <class T>
void put_le(std::ostream& out, T value)
{
    std::array<char, sizeof(T)> bytes{};
    for (std::size_t i = 0; i < sizeof(T); ++i)
        bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
    out.write(bytes.data(), bytes.size());
}

template <class T>
T get_le(std::istream& in)
{
    std::array<unsigned char, sizeof(T)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in)
        throw std::runtime_error("unexpected end of file");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return static_cast<T>(v);
}

inline void put_f64(std::ostream& out, double v)
{
    put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

inline double get_f64(std::istream& in)
{
    return std::bit_cast<double>(get_le<std::uint64_t>(in));
}

} // namespace mfuse::binary
