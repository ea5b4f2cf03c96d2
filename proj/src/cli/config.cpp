#include "mfuse/cli/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>

#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

#ifndef MFUSE_DEFAULT_DATA_DIR
#define MFUSE_DEFAULT_DATA_DIR "data/toy"
#endif

namespace mfuse::cli {
namespace {

const std::vector<std::pair<std::string, std::string>>& schema()
{
    static const std::vector<std::pair<std::string, std::string>> keys{
        {"run.seed", "1"},
        {"run.data_dir", MFUSE_DEFAULT_DATA_DIR},
        {"run.eval_count", "8"},
        {"run.max_images", "0"},
        {"run.noise_levels", "10,20,30,40,50"},
        {"synth.clip", "true"},
        {"denoise.input", ""},
        {"denoise.sigma", "25"},
        {"denoiser.kind", "tiny"},
        {"denoiser.model", ""},
        {"denoiser.depth", "7"},
        {"denoiser.width", "24"},
        {"denoiser.epochs", "50"},
        {"denoiser.batch_size", "8"},
        {"denoiser.patch_size", "64"},
        {"denoiser.stride", "32"},
        {"denoiser.sigma_max", "55"},
        {"denoiser.eval_sigma", "25"},
        {"denoiser.augment", "true"},
        {"manip.modes", "all"},
        {"fusion.epochs", "100"},
        {"fusion.batch_size", "4"},
        {"fusion.patch_size", "50"},
        {"fusion.stride", "50"},
        {"fusion.trunk_channels", "32"},
        {"fusion.se_hidden", "8"},
        {"fusion.variants", "spatial_only,channel_only,dual_fusion"},
        {"fusion.model_dir", ""},
        {"aux.configs", "baseline,l1,l2,image"},
        {"aux.lambda", "0.1"},
        {"aux.window", "10"},
        {"aux.estimator_width", "32"},
        {"psd.bins", "32"},
    };
    return keys;
}

} // namespace

ExperimentConfig::ExperimentConfig()
{
    for (const auto& [key, value] : schema())
        tree_.put(key, value);
}

void ExperimentConfig::require_known(const std::string& key) const
{
    for (const auto& entry : schema())
        if (entry.first == key)
            return;
    throw std::invalid_argument(fmt::format("unknown config key '{}'", key));
}

void ExperimentConfig::merge_stream(std::istream& in, const std::string& origin)
{
    boost::property_tree::ptree file;
    try {
        boost::property_tree::read_ini(in, file);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw std::invalid_argument(fmt::format("{}: {}", origin, e.message()));
    }
    for (const auto& [section, body] : file) {
        if (body.empty() && !body.data().empty())
            throw std::invalid_argument(fmt::format("{}: key '{}' outside a section", origin, section));
        for (const auto& [key, value] : body)
            set(section + "." + key, value.data());
    }
}

void ExperimentConfig::merge_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument(fmt::format("cannot read config file {}", path.string()));
    merge_stream(in, path.string());
}

void ExperimentConfig::set(const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument(fmt::format("expected section.key=value, got '{}'", assignment));
    set(boost::trim_copy(assignment.substr(0, eq)), boost::trim_copy(assignment.substr(eq + 1)));
}

void ExperimentConfig::set(const std::string& key, const std::string& value)
{
    require_known(key);
    tree_.put(key, value);
}

std::string ExperimentConfig::text(const std::string& key) const
{
    require_known(key);
    return tree_.get<std::string>(key);
}

long ExperimentConfig::integer(const std::string& key, long min, long max) const
{
    const std::string s = text(key);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::invalid_argument(fmt::format("{} must be an integer, got '{}'", key, s));
    if (v < min || v > max)
        throw std::invalid_argument(fmt::format("{} must be in [{}, {}], got {}", key, min, max, v));
    return v;
}

std::size_t ExperimentConfig::count(const std::string& key, std::size_t min) const
{
    return static_cast<std::size_t>(integer(key, static_cast<long>(min), std::numeric_limits<int>::max()));
}

double ExperimentConfig::real(const std::string& key) const
{
    const std::string s = text(key);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size())
            return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(fmt::format("{} must be a number, got '{}'", key, s));
}

bool ExperimentConfig::flag(const std::string& key) const
{
    const std::string s = boost::to_lower_copy(text(key));
    if (s == "true" || s == "1" || s == "yes")
        return true;
    if (s == "false" || s == "0" || s == "no")
        return false;
    throw std::invalid_argument(fmt::format("{} must be true or false, got '{}'", key, s));
}

std::uint64_t ExperimentConfig::seed() const
{
    const std::string s = text("run.seed");
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::invalid_argument(fmt::format("run.seed must be a non-negative integer, got '{}'", s));
    return v;
}

std::vector<std::string> ExperimentConfig::list(const std::string& key) const
{
    std::vector<std::string> parts;
    const std::string s = text(key);
    if (boost::trim_copy(s).empty())
        return parts;
    boost::split(parts, s, boost::is_any_of(","));
    for (auto& p : parts) {
        boost::trim(p);
        if (p.empty())
            throw std::invalid_argument(fmt::format("{} has an empty list item: '{}'", key, s));
    }
    return parts;
}

std::vector<double> ExperimentConfig::reals(const std::string& key) const
{
    std::vector<double> out;
    for (const auto& item : list(key)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument("trailing text");
        } catch (const std::exception&) {
            throw std::invalid_argument(fmt::format("{}: '{}' is not a number", key, item));
        }
    }
    return out;
}

std::vector<int> ExperimentConfig::mode_ids(const std::string& key) const
{
    if (boost::trim_copy(text(key)) == "all") {
        std::vector<int> all;
        for (int i = 0; i <= 12; ++i)
            all.push_back(i);
        return all;
    }
    std::vector<int> out;
    for (const auto& item : list(key)) {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size())
            throw std::invalid_argument(fmt::format("{}: '{}' is not a mode id", key, item));
        out.push_back(v);
    }
    return out;
}

void ExperimentConfig::write(std::ostream& out) const
{
    std::string section;
    for (const auto& entry : schema()) {
        const std::string& key = entry.first;
        const auto dot = key.find('.');
        const std::string sec = key.substr(0, dot);
        if (sec != section) {
            out << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
            section = sec;
        }
        out << key.substr(dot + 1) << " = " << tree_.get<std::string>(key) << '\n';
    }
}

} // namespace mfuse::cli
