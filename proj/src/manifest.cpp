#include "pathqa/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "pathqa/errors.hpp"
#include "pathqa/io_util.hpp"

namespace pathqa {

namespace {
constexpr int kManifestVersion = 1;
}

void RunManifest::add_input(const std::string& path) {
    inputs[path] = io::fnv1a_hex(io::fnv1a_file(path));
}

void RunManifest::add_output(const std::string& path) {
    outputs[path] = io::fnv1a_hex(io::fnv1a_file(path));
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["manifest_version"] = kManifestVersion;
    j["command"] = command;
    j["argv"] = argv;
    j["config"] = config;
    j["root_seed"] = root_seed;
    j["derived_seeds"] = derived_seeds;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["format_versions"] = format_versions;
    j["timings_seconds"] = timings_seconds;
    return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open manifest for writing: " + path);
    out << to_json();
    if (!out) throw IoError("failed writing manifest: " + path);
}

RunManifest RunManifest::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest " + path + ": " + e.what());
    }
    try {
        if (j.at("manifest_version").get<int>() != kManifestVersion)
            throw IoError("unsupported manifest version in " + path);
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.argv = j.at("argv").get<std::vector<std::string>>();
        m.config = j.at("config").get<std::map<std::string, std::string>>();
        m.root_seed = j.at("root_seed").get<std::uint64_t>();
        m.derived_seeds = j.at("derived_seeds").get<std::map<std::string, std::uint64_t>>();
        m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        m.format_versions = j.at("format_versions").get<std::map<std::string, std::uint32_t>>();
        m.timings_seconds = j.at("timings_seconds").get<std::map<std::string, double>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("manifest " + path + " missing fields: " + e.what());
    }
}

}  // namespace pathqa
