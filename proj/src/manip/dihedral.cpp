#include "mfuse/manip/dihedral.hpp"

namespace mfuse::manip {

ImageGray rotate_ccw(const ImageGray& image, int quarter_turns)
{
    const int q = ((quarter_turns % 4) + 4) % 4;
    const std::size_t h = image.height();
    const std::size_t w = image.width();
    switch (q) {
    case 0:
        return image;
    case 1: {
        ImageGray out(w, h);
        for (std::size_t i = 0; i < w; ++i)
            for (std::size_t j = 0; j < h; ++j)
                out(i, j) = image(j, w - 1 - i);
        return out;
    }
    case 2: {
        ImageGray out(h, w);
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j)
                out(i, j) = image(h - 1 - i, w - 1 - j);
        return out;
    }
    default: {
        ImageGray out(w, h);
        for (std::size_t i = 0; i < w; ++i)
            for (std::size_t j = 0; j < h; ++j)
                out(i, j) = image(h - 1 - j, i);
        return out;
    }
    }
}

ImageGray mirror_rows(const ImageGray& image)
{
    ImageGray out(image.height(), image.width());
    for (std::size_t i = 0; i < image.height(); ++i)
        for (std::size_t j = 0; j < image.width(); ++j)
            out(i, j) = image(image.height() - 1 - i, j);
    return out;
}

ImageGray apply_action(const ImageGray& image, DihedralAction action)
{
    ImageGray out = rotate_ccw(image, action.quarter_turns);
    return action.mirror ? mirror_rows(out) : out;
}

ImageGray invert_action(const ImageGray& image, DihedralAction action)
{
    const ImageGray unmirrored = action.mirror ? mirror_rows(image) : image;
    return rotate_ccw(unmirrored, 4 - action.quarter_turns);
}

ImageGray apply_dihedral(const ImageGray& image, const ManipulationMode& mode)
{
    return apply_action(image, mode.dihedral());
}

ImageGray invert_dihedral(const ImageGray& image, const ManipulationMode& mode)
{
    return invert_action(image, mode.dihedral());
}

} // namespace mfuse::manip
