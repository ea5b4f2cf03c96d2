#include "mfuse/nn/serialize.hpp"

#include "mfuse/binary_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace mfuse::nn {
namespace {

constexpr std::array<char, 8> magic{'M', 'F', 'U', 'S', 'E', 'P', 'R', 'M'};
constexpr std::uint32_t version = 1;

using binary::get_le;
using binary::put_le;

} // namespace

void save_params(std::ostream& out, const ParamList& params)
{
    out.write(magic.data(), magic.size());
    put_le<std::uint32_t>(out, version);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put_le<std::uint8_t>(out, static_cast<std::uint8_t>(p.kind));
        put_le<std::uint8_t>(out, p.trainable ? 1 : 0);
        put_le<std::uint8_t>(out, 4);
        for (std::size_t d : {p.shape.n, p.shape.c, p.shape.h, p.shape.w})
            put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (const auto& p : params)
        for (double v : p.values())
            put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

void save_params(const std::filesystem::path& path, const ParamList& params)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    save_params(out, params);
}

void load_params(std::istream& in, const ParamList& params)
{
    std::array<char, 8> head{};
    in.read(head.data(), head.size());
    if (!in || head != magic)
        throw std::runtime_error("not a parameter file (bad magic)");
    if (const auto v = get_le<std::uint32_t>(in); v != version)
        throw std::runtime_error(fmt::format("unsupported parameter file version {}", v));
    const auto count = get_le<std::uint32_t>(in);
    if (count != params.size())
        throw std::runtime_error(fmt::format("parameter file has {} entries, model expects {}", count, params.size()));
    for (const auto& p : params) {
        const auto len = get_le<std::uint16_t>(in);
        std::string name(len, '\0');
        in.read(name.data(), len);
        const auto kind = get_le<std::uint8_t>(in);
        const auto train = get_le<std::uint8_t>(in);
        const auto rank = get_le<std::uint8_t>(in);
        if (rank != 4)
            throw std::runtime_error(fmt::format("entry {} has rank {}, expected 4", name, rank));
        Shape s;
        s.n = get_le<std::uint32_t>(in);
        s.c = get_le<std::uint32_t>(in);
        s.h = get_le<std::uint32_t>(in);
        s.w = get_le<std::uint32_t>(in);
        if (name != p.name || kind != static_cast<std::uint8_t>(p.kind) || (train != 0) != p.trainable || s != p.shape)
            throw std::runtime_error(fmt::format("manifest mismatch: file has {} {}, model expects {} {}", name,
                                                 s.str(), p.name, p.shape.str()));
    }
    // Read everything first so a truncated file leaves the model untouched.
    std::vector<std::vector<double>> staged;
    for (const auto& p : params) {
        std::vector<double> values(p.values().size());
        for (double& v : values)
            v = std::bit_cast<double>(get_le<std::uint64_t>(in));
        staged.push_back(std::move(values));
    }
    for (std::size_t i = 0; i < params.size(); ++i)
        std::copy(staged[i].begin(), staged[i].end(), params[i].values().begin());
}

void load_params(const std::filesystem::path& path, const ParamList& params)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error(fmt::format("cannot open model file {}", path.string()));
    load_params(in, params);
}

} // namespace mfuse::nn
