/*
 * voxfuse : volumetric lesion mask fusion and evaluation
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VOXFUSE_CONFIG_HPP
#define VOXFUSE_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "voxfuse/ensemble.hpp"
#include "voxfuse/lesion_load.hpp"
#include "voxfuse/regions.hpp"
#include "voxfuse/synthetic.hpp"

namespace voxfuse {

// Run and cohort configuration. The format is a flat UTF-8 key=value
// file: one `key = value` pair per line, `#` lines are comments, and
// lists are expressed by repeating a key. Dotted key names scope
// related entries but the syntax itself has no nesting, so the files
// stay trivially parseable from any language.
//
// Run config keys:
//   atlas / tract            volume paths (tract required for evaluation)
//   out_dir                  default report directory
//   jobs                     default parallelism degree
//   severity.t1/.t2          category cutoffs (0 < t1 < t2)
//   severity.measure         raw_cc | normalized
//   side.convention          neurological | radiological
//   subject = <id>           declares a subject, then
//     subject.<id>.truth / subject.<id>.pred.<model>
//   preset = <name>          declares a fusion preset, then
//     preset.<name>.method   stack | agreement_window | regionwise
//     preset.<name>.member   repeated model names (stack / window)
//     preset.<name>.window / .threshold / .stride
//   regionwise presets instead declare groups:
//     preset.<name>.group = 1+4   (repeated; '+'-joined region ids, must
//                                  disjointly cover 1..4)
//     preset.<name>.group.1+4.method / .member / .window / ...
//
// Relative paths are resolved against the config file's directory.

/// Parsed key=value lines in file order.
class KeyValueFile {
public:
    static KeyValueFile parse(const std::string& text,
                              const std::string& origin = "<string>") {
        KeyValueFile kv;
        kv.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string_view sv = trim(line);
            if (sv.empty() || sv.front() == '#')
                continue;
            const auto eq = sv.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
            const std::string key(trim(sv.substr(0, eq)));
            const std::string value(trim(sv.substr(eq + 1)));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": empty key");
            kv.entries_.emplace_back(key, value);
        }
        return kv;
    }

    static KeyValueFile load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file '" + path.string() +
                              "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str(), path.string());
    }

    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

    std::vector<std::string> get_all(const std::string& key) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries_)
            if (k == key)
                out.push_back(v);
        return out;
    }

    std::optional<std::string> get(const std::string& key) const {
        const auto all = get_all(key);
        if (all.empty())
            return std::nullopt;
        if (all.size() > 1)
            throw ConfigError(origin_ + ": key '" + key +
                              "' given more than once");
        return all.front();
    }

    std::string require(const std::string& key) const {
        auto v = get(key);
        if (!v)
            throw ConfigError(origin_ + ": missing required key '" + key + "'");
        return *v;
    }

    double get_double(const std::string& key, double fallback) const {
        auto v = get(key);
        return v ? parse_double(key, *v) : fallback;
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        auto v = get(key);
        return v ? parse_int(key, *v) : fallback;
    }

    /// Entries whose key starts with `prefix`, as (key suffix, value).
    std::vector<std::pair<std::string, std::string>>
    with_prefix(const std::string& prefix) const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [k, v] : entries_)
            if (k.size() > prefix.size() && k.compare(0, prefix.size(), prefix) == 0)
                out.emplace_back(k.substr(prefix.size()), v);
        return out;
    }

    double parse_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size())
                throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key '" + key + "': '" + v +
                              "' is not a number");
        }
    }

    std::int64_t parse_int(const std::string& key, const std::string& v) const {
        std::int64_t out = 0;
        const auto* begin = v.data();
        const auto* end = v.data() + v.size();
        const auto res = std::from_chars(begin, end, out);
        if (res.ec != std::errc{} || res.ptr != end)
            throw ConfigError(origin_ + ": key '" + key + "': '" + v +
                              "' is not an integer");
        return out;
    }

    const std::string& origin() const { return origin_; }

private:
    static std::string_view trim(std::string_view sv) {
        while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t' ||
                               sv.front() == '\r'))
            sv.remove_prefix(1);
        while (!sv.empty() && (sv.back() == ' ' || sv.back() == '\t' ||
                               sv.back() == '\r'))
            sv.remove_suffix(1);
        return sv;
    }

    std::string origin_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// One subject: ground truth plus named model predictions.
struct SubjectSpec {
    std::string id;
    std::filesystem::path truth;
    std::vector<std::pair<std::string, std::filesystem::path>> predictions;
};

/// One per-region entry of a regionwise preset.
struct RegionFusionEntry {
    RegionSet regions;
    FusionSpec spec;
};

/// A named fusion recipe: either one whole-brain FusionSpec or a
/// regionwise list of them.
struct PresetSpec {
    std::string name;
    bool regionwise = false;
    FusionSpec whole;
    std::vector<RegionFusionEntry> groups;

    /// Model ids this preset needs.
    std::vector<std::string> member_ids() const {
        std::vector<std::string> out;
        auto add = [&out](const FusionSpec& s) {
            for (const auto& m : s.members)
                if (std::find(out.begin(), out.end(), m) == out.end())
                    out.push_back(m);
        };
        if (regionwise)
            for (const auto& g : groups)
                add(g.spec);
        else
            add(whole);
        return out;
    }
};

enum class LoadMeasure { RawCc, Normalized };

inline std::string_view to_string(LoadMeasure m) {
    return m == LoadMeasure::RawCc ? "raw_cc" : "normalized";
}

struct RunConfig {
    std::vector<SubjectSpec> subjects;
    std::optional<std::filesystem::path> atlas;
    std::optional<std::filesystem::path> tract;
    std::vector<PresetSpec> presets;
    SeverityThresholds thresholds{};
    LoadMeasure category_measure = LoadMeasure::RawCc;
    SideConvention side_convention = SideConvention::Neurological;
    std::filesystem::path out_dir = "voxfuse_out";
    int jobs = 1;

    const PresetSpec* find_preset(const std::string& name) const {
        for (const auto& p : presets)
            if (p.name == name)
                return &p;
        return nullptr;
    }

    const SubjectSpec* find_subject(const std::string& id) const {
        for (const auto& s : subjects)
            if (s.id == id)
                return &s;
        return nullptr;
    }
};

namespace detail {

inline bool valid_config_name(const std::string& s) {
    if (s.empty())
        return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
              c == '-'))
            return false;
    return true;
}

inline std::filesystem::path resolve_path(const std::filesystem::path& base,
                                          const std::string& value) {
    std::filesystem::path p(value);
    return p.is_absolute() ? p : base / p;
}

inline void require_exists(const std::filesystem::path& p,
                           const std::string& what) {
    if (!std::filesystem::exists(p))
        throw ConfigError(what + " path does not exist: '" + p.string() + "'");
}

inline FusionSpec parse_fusion_spec(const KeyValueFile& kv,
                                    const std::string& scope) {
    FusionSpec spec;
    const std::string method = kv.require(scope + ".method");
    if (method == "stack") {
        spec.method = FusionMethod::Stack;
    } else if (method == "agreement_window") {
        spec.method = FusionMethod::AgreementWindow;
        spec.window = static_cast<int>(kv.get_int(scope + ".window", 3));
        spec.overlap_threshold = kv.get_double(scope + ".threshold", 0.5);
        spec.stride = static_cast<int>(kv.get_int(scope + ".stride", 1));
    } else {
        throw ConfigError(kv.origin() + ": '" + scope + ".method' must be "
                          "stack or agreement_window, got '" + method + "'");
    }
    spec.members = kv.get_all(scope + ".member");
    try {
        spec.validate();
    } catch (const InvalidArgumentError& e) {
        throw ConfigError(kv.origin() + ": '" + scope + "': " + e.what());
    }
    return spec;
}

inline std::vector<int> parse_region_ids(const std::string& text,
                                         const std::string& origin) {
    std::vector<int> ids;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, '+')) {
        if (token.size() != 1 || token[0] < '1' || token[0] > '4')
            throw ConfigError(origin + ": region group '" + text +
                              "' must be '+'-joined ids from 1..4");
        ids.push_back(token[0] - '0');
    }
    if (ids.empty())
        throw ConfigError(origin + ": empty region group");
    return ids;
}

} // namespace detail

inline RunConfig load_run_config(const std::filesystem::path& path) {
    const KeyValueFile kv = KeyValueFile::load(path);
    const std::filesystem::path base = path.parent_path();
    RunConfig cfg;

    if (auto v = kv.get("atlas")) {
        cfg.atlas = detail::resolve_path(base, *v);
        detail::require_exists(*cfg.atlas, "atlas");
    }
    if (auto v = kv.get("tract")) {
        cfg.tract = detail::resolve_path(base, *v);
        detail::require_exists(*cfg.tract, "tract");
    }
    if (auto v = kv.get("out_dir"))
        cfg.out_dir = detail::resolve_path(base, *v);
    cfg.jobs = static_cast<int>(kv.get_int("jobs", 1));
    if (cfg.jobs < 1)
        throw ConfigError(kv.origin() + ": jobs must be >= 1");

    cfg.thresholds.t1 = kv.get_double("severity.t1", cfg.thresholds.t1);
    cfg.thresholds.t2 = kv.get_double("severity.t2", cfg.thresholds.t2);
    try {
        cfg.thresholds.validate();
    } catch (const InvalidArgumentError& e) {
        throw ConfigError(kv.origin() + ": " + e.what());
    }
    if (auto v = kv.get("severity.measure")) {
        if (*v == "raw_cc")
            cfg.category_measure = LoadMeasure::RawCc;
        else if (*v == "normalized")
            cfg.category_measure = LoadMeasure::Normalized;
        else
            throw ConfigError(kv.origin() +
                              ": severity.measure must be raw_cc or "
                              "normalized");
    }
    if (auto v = kv.get("side.convention")) {
        if (*v == "neurological")
            cfg.side_convention = SideConvention::Neurological;
        else if (*v == "radiological")
            cfg.side_convention = SideConvention::Radiological;
        else
            throw ConfigError(kv.origin() +
                              ": side.convention must be neurological or "
                              "radiological");
    }

    std::set<std::string> seen_subjects;
    for (const std::string& id : kv.get_all("subject")) {
        if (!detail::valid_config_name(id))
            throw ConfigError(kv.origin() + ": invalid subject id '" + id +
                              "'");
        if (!seen_subjects.insert(id).second)
            throw ConfigError(kv.origin() + ": duplicate subject id '" + id +
                              "'");
        SubjectSpec s;
        s.id = id;
        s.truth = detail::resolve_path(base, kv.require("subject." + id +
                                                        ".truth"));
        detail::require_exists(s.truth, "subject " + id + " truth");
        const std::string pred_prefix = "subject." + id + ".pred.";
        for (const auto& [model, value] : kv.with_prefix(pred_prefix)) {
            if (!detail::valid_config_name(model))
                throw ConfigError(kv.origin() + ": invalid model name '" +
                                  model + "' for subject " + id);
            auto p = detail::resolve_path(base, value);
            detail::require_exists(p, "subject " + id + " prediction " + model);
            s.predictions.emplace_back(model, std::move(p));
        }
        cfg.subjects.push_back(std::move(s));
    }

    std::set<std::string> seen_presets;
    for (const std::string& name : kv.get_all("preset")) {
        if (!detail::valid_config_name(name))
            throw ConfigError(kv.origin() + ": invalid preset name '" + name +
                              "'");
        if (!seen_presets.insert(name).second)
            throw ConfigError(kv.origin() + ": duplicate preset name '" +
                              name + "'");
        PresetSpec preset;
        preset.name = name;
        const std::string scope = "preset." + name;
        const std::string method = kv.require(scope + ".method");
        if (method == "regionwise") {
            preset.regionwise = true;
            const auto groups = kv.get_all(scope + ".group");
            if (groups.empty())
                throw ConfigError(kv.origin() + ": regionwise preset '" +
                                  name + "' declares no groups");
            std::set<int> claimed;
            for (const std::string& group : groups) {
                auto ids = detail::parse_region_ids(group, kv.origin());
                for (int id : ids)
                    if (!claimed.insert(id).second)
                        throw ConfigError(kv.origin() + ": preset '" + name +
                                          "': region " + std::to_string(id) +
                                          " claimed by more than one group");
                RegionFusionEntry entry{
                    RegionSet(ids),
                    detail::parse_fusion_spec(kv, scope + ".group." + group)};
                preset.groups.push_back(std::move(entry));
            }
            for (int id = 1; id <= AtlasVolume::k_max_label; ++id)
                if (!claimed.count(id))
                    throw ConfigError(kv.origin() + ": preset '" + name +
                                      "': region " + std::to_string(id) +
                                      " not covered by any group");
        } else {
            preset.whole = detail::parse_fusion_spec(kv, scope);
        }
        cfg.presets.push_back(std::move(preset));
    }

    // every member a preset names must exist for every subject
    for (const auto& preset : cfg.presets)
        for (const auto& member : preset.member_ids())
            for (const auto& subject : cfg.subjects) {
                bool found = false;
                for (const auto& [model, _] : subject.predictions)
                    if (model == member)
                        found = true;
                if (!found)
                    throw ConfigError(kv.origin() + ": preset '" + preset.name +
                                      "' needs model '" + member +
                                      "' which subject '" + subject.id +
                                      "' does not provide");
            }
    if (std::any_of(cfg.presets.begin(), cfg.presets.end(),
                    [](const PresetSpec& p) { return p.regionwise; }) &&
        !cfg.atlas)
        throw ConfigError(kv.origin() +
                          ": regionwise presets require an atlas path");
    return cfg;
}

/// Cohort-level synthesis parameters (input of the synth command).
struct CohortSpec {
    std::uint64_t seed = 1;
    int subjects = 50;
    int models = 3;
    GridShape shape{64, 64, 32, 2.0, 2.0, 2.0};
    NoiseSpec noise{0, 0.3, 10, 5, 0.12};
    double lesion_radius_min = 3.5;
    double lesion_radius_max = 9.0;

    void validate() const {
        if (subjects < 1)
            throw ConfigError("cohort spec: subjects must be >= 1");
        if (models < 1)
            throw ConfigError("cohort spec: models must be >= 1");
        if (!(lesion_radius_min > 0.0) ||
            !(lesion_radius_max >= lesion_radius_min))
            throw ConfigError(
                "cohort spec: lesion radii must satisfy 0 < min <= max");
        noise.validate();
    }
};

inline CohortSpec load_cohort_spec(const std::filesystem::path& path) {
    const KeyValueFile kv = KeyValueFile::load(path);
    CohortSpec spec;
    spec.seed = static_cast<std::uint64_t>(
        kv.get_int("seed", static_cast<std::int64_t>(spec.seed)));
    spec.subjects = static_cast<int>(kv.get_int("subjects", spec.subjects));
    spec.models = static_cast<int>(kv.get_int("models", spec.models));
    const int nx = static_cast<int>(kv.get_int("shape.nx", spec.shape.nx));
    const int ny = static_cast<int>(kv.get_int("shape.ny", spec.shape.ny));
    const int nz = static_cast<int>(kv.get_int("shape.nz", spec.shape.nz));
    const double sx = kv.get_double("spacing.x", spec.shape.sx);
    const double sy = kv.get_double("spacing.y", spec.shape.sy);
    const double sz = kv.get_double("spacing.z", spec.shape.sz);
    try {
        spec.shape = GridShape(nx, ny, nz, sx, sy, sz);
    } catch (const InvalidArgumentError& e) {
        throw ConfigError(kv.origin() + ": " + e.what());
    }
    spec.noise.boundary_jitter =
        kv.get_double("noise.jitter", spec.noise.boundary_jitter);
    spec.noise.dropout = kv.get_double("noise.dropout", spec.noise.dropout);
    spec.noise.fp_blob_count =
        static_cast<int>(kv.get_int("noise.blobs", spec.noise.fp_blob_count));
    spec.noise.fp_blob_radius = static_cast<int>(
        kv.get_int("noise.blob_radius", spec.noise.fp_blob_radius));
    spec.lesion_radius_min =
        kv.get_double("lesion.radius_min", spec.lesion_radius_min);
    spec.lesion_radius_max =
        kv.get_double("lesion.radius_max", spec.lesion_radius_max);
    try {
        spec.validate();
    } catch (const Error& e) {
        throw ConfigError(kv.origin() + ": " + std::string(e.what()));
    }
    return spec;
}

} // namespace voxfuse

#endif
