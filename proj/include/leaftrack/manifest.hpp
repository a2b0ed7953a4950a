#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "leaftrack/serialize.hpp"

namespace leaftrack {

struct ManifestEntry {
    std::string plant_id;
    int day = 0;
    int view = 0; // 0 or 90
    std::string image_path;
};

struct Manifest {
    std::string root; // directory paths are resolved against
    std::map<int, std::string> backgrounds; // view -> image path
    std::vector<ManifestEntry> entries;
    std::string ground_truth_path; // empty when absent

    std::string resolve(const std::string& p) const {
        std::filesystem::path fp(p);
        if (fp.is_absolute()) return p;
        return (std::filesystem::path(root) / fp).string();
    }

    std::vector<std::string> plants() const {
        std::set<std::string> ids;
        for (const auto& e : entries) ids.insert(e.plant_id);
        return {ids.begin(), ids.end()};
    }

    const ManifestEntry* find(const std::string& plant, int day, int view) const {
        for (const auto& e : entries)
            if (e.plant_id == plant && e.day == day && e.view == view) return &e;
        return nullptr;
    }

    std::vector<int> days_of(const std::string& plant) const {
        std::set<int> days;
        for (const auto& e : entries)
            if (e.plant_id == plant) days.insert(e.day);
        return {days.begin(), days.end()};
    }
};

inline json manifest_to_json(const Manifest& m) {
    json j;
    j["root"] = m.root;
    json bg = json::object();
    for (const auto& [view, path] : m.backgrounds) bg[std::to_string(view)] = path;
    j["backgrounds"] = std::move(bg);
    if (!m.ground_truth_path.empty()) j["ground_truth"] = m.ground_truth_path;
    json entries = json::array();
    for (const auto& e : m.entries)
        entries.push_back({{"plant", e.plant_id},
                           {"day", e.day},
                           {"view", e.view},
                           {"image", e.image_path}});
    j["entries"] = std::move(entries);
    return j;
}

// Loads and validates a manifest: unique (plant, day, view) keys and all
// referenced files present.
inline Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_manifest: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("load_manifest: bad JSON in " + path + ": " + e.what());
    }

    Manifest m;
    m.root = j.value("root", std::string("."));
    if (std::filesystem::path(m.root).is_relative())
        m.root = (std::filesystem::path(path).parent_path() / m.root)
                     .lexically_normal()
                     .string();
    if (m.root.empty()) m.root = ".";

    if (j.contains("backgrounds"))
        for (const auto& [view, p] : j.at("backgrounds").items())
            m.backgrounds[std::stoi(view)] = p.get<std::string>();
    if (j.contains("ground_truth"))
        m.ground_truth_path = j.at("ground_truth").get<std::string>();

    std::set<std::tuple<std::string, int, int>> keys;
    for (const auto& je : j.at("entries")) {
        ManifestEntry e;
        e.plant_id = je.at("plant").get<std::string>();
        e.day = je.at("day").get<int>();
        e.view = je.at("view").get<int>();
        e.image_path = je.at("image").get<std::string>();
        if (e.view != 0 && e.view != 90)
            throw std::runtime_error("load_manifest: view must be 0 or 90 for plant " +
                                     e.plant_id);
        const auto key = std::make_tuple(e.plant_id, e.day, e.view);
        if (!keys.insert(key).second)
            throw std::runtime_error("load_manifest: duplicate entry for plant " +
                                     e.plant_id + " day " + std::to_string(e.day) +
                                     " view " + std::to_string(e.view));
        if (!std::filesystem::exists(m.resolve(e.image_path)))
            throw std::runtime_error("load_manifest: missing image " +
                                     m.resolve(e.image_path));
        m.entries.push_back(std::move(e));
    }
    for (const auto& [view, p] : m.backgrounds)
        if (!std::filesystem::exists(m.resolve(p)))
            throw std::runtime_error("load_manifest: missing background " + m.resolve(p));
    if (!m.ground_truth_path.empty() &&
        !std::filesystem::exists(m.resolve(m.ground_truth_path)))
        throw std::runtime_error("load_manifest: missing ground truth " +
                                 m.resolve(m.ground_truth_path));
    return m;
}

inline void save_manifest(const Manifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_manifest: cannot write " + path);
    out << manifest_to_json(m).dump(2) << "\n";
}

// Builds a manifest by scanning a directory against a filename pattern
// with three capture groups: plant id, day, view.
inline Manifest scan_manifest(const std::string& dir,
                              const std::string& pattern =
                                  R"((.+)_day(\d+)_view(0|90)\.png)") {
    Manifest m;
    m.root = dir;
    const std::regex re(pattern);
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const std::string name = f.filename().string();
        std::smatch match;
        if (name == "background_view0.png") m.backgrounds[0] = name;
        if (name == "background_view90.png") m.backgrounds[90] = name;
        if (!std::regex_match(name, match, re)) continue;
        ManifestEntry e;
        e.plant_id = match[1];
        e.day = std::stoi(match[2]);
        e.view = std::stoi(match[3]);
        e.image_path = name;
        m.entries.push_back(std::move(e));
    }
    if (std::filesystem::exists(std::filesystem::path(dir) / "ground_truth.json"))
        m.ground_truth_path = "ground_truth.json";
    return m;
}

} // namespace leaftrack
