#pragma once

#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mfuse::cli {

/// Flat `section.key = value` settings with a fixed schema of defaults.
/// Unknown keys are rejected so typos fail loudly.
class ExperimentConfig {
public:
    /// All keys at their defaults.
    ExperimentConfig();

    /// Overlay an INI file.
    void merge_file(const std::filesystem::path& path);
    void merge_stream(std::istream& in, const std::string& origin);
    /// Overlay one `section.key=value` assignment.
    void set(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    std::string text(const std::string& key) const;
    long integer(const std::string& key, long min, long max) const;
    std::size_t count(const std::string& key, std::size_t min = 0) const;
    double real(const std::string& key) const;
    bool flag(const std::string& key) const;
    std::uint64_t seed() const;
    std::vector<std::string> list(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;
    /// Mode ids; "all" expands to 0..12.
    std::vector<int> mode_ids(const std::string& key) const;

    /// Resolved settings in schema order.
    void write(std::ostream& out) const;

private:
    void require_known(const std::string& key) const;
    boost::property_tree::ptree tree_;
};

} // namespace mfuse::cli
