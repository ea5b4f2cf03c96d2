// Regenerates the bundled synthetic images.
#include "mfuse/dataset.hpp"
#include "mfuse/pgm.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

int main(int argc, char** argv)
{
    CLI::App app{"Write the synthetic toy image set as PGM files"};
    std::string dir;
    std::size_t count = 24;
    std::size_t size = 100;
    std::uint64_t seed = 2024;
    app.add_option("dir", dir, "Output directory")->required();
    app.add_option("--count", count, "Number of images")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--size", size, "Side length in pixels")->capture_default_str()->check(CLI::Range(8, 4096));
    app.add_option("--seed", seed, "Generator seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);
    try {
        std::filesystem::create_directories(dir);
        const auto images = mfuse::generate_toy_images(count, size, seed);
        for (std::size_t i = 0; i < images.size(); ++i)
            mfuse::write_pgm(std::filesystem::path(dir) / (mfuse::toy_image_name(i) + ".pgm"), images[i]);
        std::cout << "wrote " << images.size() << " images to " << dir << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
