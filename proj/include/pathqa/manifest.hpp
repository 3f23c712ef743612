#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pathqa {

// Record of one CLI run: resolved configuration, the seed tree, and FNV-1a
// checksums of every file read or written. Re-running the same command on the
// same platform must reproduce the output checksums.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::map<std::string, std::string> config;         // resolved flag values
    std::uint64_t root_seed = 0;
    std::map<std::string, std::uint64_t> derived_seeds;
    std::map<std::string, std::string> inputs;         // path -> checksum hex
    std::map<std::string, std::string> outputs;        // path -> checksum hex
    std::map<std::string, std::uint32_t> format_versions;
    std::map<std::string, double> timings_seconds;

    // Checksum the file now and record it. Throws IoError if unreadable.
    void add_input(const std::string& path);
    void add_output(const std::string& path);

    std::string to_json() const;
    void write(const std::string& path) const;
    static RunManifest load(const std::string& path);
};

}  // namespace pathqa
