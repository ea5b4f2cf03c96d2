#include "mfuse/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <stdexcept>

namespace mfuse {
namespace {

// Header tokens may be separated by whitespace and '#' comments.
std::string next_token(std::istream& in)
{
    std::string token;
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n')
                ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    while (ch != EOF && !std::isspace(ch)) {
        token.push_back(static_cast<char>(ch));
        ch = in.get();
    }
    return token;
}

std::size_t parse_dim(const std::string& token, const char* what)
{
    std::size_t pos = 0;
    unsigned long value = 0;
    try {
        value = std::stoul(token, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != token.size())
        throw std::invalid_argument(fmt::format("PGM header: bad {} '{}'", what, token));
    return value;
}

unsigned char to_byte(double v)
{
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace

ImageGray read_pgm(std::istream& in)
{
    if (next_token(in) != "P5")
        throw std::invalid_argument("not a binary PGM (expected P5 magic)");
    const std::size_t width = parse_dim(next_token(in), "width");
    const std::size_t height = parse_dim(next_token(in), "height");
    const std::size_t maxval = parse_dim(next_token(in), "maxval");
    if (maxval != 255)
        throw std::invalid_argument(fmt::format("PGM maxval {} unsupported (only 255)", maxval));
    std::vector<unsigned char> raw(width * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw std::invalid_argument("PGM pixel data truncated");
    std::vector<double> data(raw.size());
    std::transform(raw.begin(), raw.end(), data.begin(), [](unsigned char b) { return b / 255.0; });
    return ImageGray(height, width, std::move(data));
}

ImageGray read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error(fmt::format("cannot open {}", path.string()));
    try {
        return read_pgm(in);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void write_pgm(std::ostream& out, const ImageGray& image)
{
    out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<unsigned char> raw(image.size());
    std::transform(image.data().begin(), image.data().end(), raw.begin(), to_byte);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

void write_pgm(const std::filesystem::path& path, const ImageGray& image)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    write_pgm(out, image);
}

ImageGray quantize_8bit(const ImageGray& image)
{
    ImageGray out(image.height(), image.width());
    std::transform(image.data().begin(), image.data().end(), out.data().begin(),
                   [](double v) { return to_byte(v) / 255.0; });
    return out;
}

} // namespace mfuse
