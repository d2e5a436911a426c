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

#ifndef VOXFUSE_CLI_HPP
#define VOXFUSE_CLI_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voxfuse/pipeline.hpp"
#include "voxfuse/version.hpp"

namespace voxfuse::cli {

// Command-line surface. Exit codes: 0 success, 1 usage error, 2 data
// error (bad config, bad volume format, invalid parameters), 3 io error.
// Verbosity comes from VOXFUSE_LOG in {error, warn, info, debug};
// unset defaults to warn.

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("VOXFUSE_LOG");
        if (!env)
            return LogLevel::Warn;
        const std::string v(env);
        if (v == "error")
            return LogLevel::Error;
        if (v == "warn")
            return LogLevel::Warn;
        if (v == "info")
            return LogLevel::Info;
        if (v == "debug")
            return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return level;
}

inline void log(LogLevel lvl, const std::string& msg) {
    if (static_cast<int>(lvl) > static_cast<int>(log_level()))
        return;
    static constexpr const char* names[4] = {"error", "warn", "info", "debug"};
    std::cerr << "voxfuse [" << names[static_cast<int>(lvl)] << "] " << msg
              << "\n";
}

namespace detail {

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory '" + dir.string() +
                      "': " + ec.message());
}

struct CommonArgs {
    std::string config;
    std::string out;
    int jobs = 0;
};

inline int cmd_evaluate(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args.config);
    const std::filesystem::path out_dir =
        args.out.empty() ? cfg.out_dir : std::filesystem::path(args.out);
    const CohortReport report = evaluate_cohort(cfg, args.jobs);
    for (const auto& row : report.rows)
        for (const auto& flag : row.flags)
            log(row.error ? LogLevel::Error : LogLevel::Info,
                row.subject + "/" + row.preset + ": " + flag +
                    (row.error ? " " + row.error_message : ""));
    ensure_dir(out_dir);
    write_text(out_dir / "report.csv", render_report_csv(report));
    write_text(out_dir / "confusion.csv", render_confusion_csv(report));
    const std::string table = render_report_table(report);
    write_text(out_dir / "report.txt", table);
    std::cout << table;
    log(LogLevel::Info, "report written to " + out_dir.string());
    return 0;
}

inline int cmd_compare(const CommonArgs& args,
                       const std::vector<std::string>& presets) {
    RunConfig cfg = load_run_config(args.config);
    RunConfig filtered = cfg;
    filtered.presets.clear();
    for (const auto& name : presets) {
        const PresetSpec* p = cfg.find_preset(name);
        if (!p)
            throw ConfigError("preset not found: '" + name + "'");
        filtered.presets.push_back(*p);
    }
    const std::filesystem::path out_dir =
        args.out.empty() ? cfg.out_dir : std::filesystem::path(args.out);
    const CohortReport report = evaluate_cohort(filtered, args.jobs);
    const auto rows = compare_presets(report, presets);
    ensure_dir(out_dir);
    write_text(out_dir / "compare.csv", render_compare_csv(rows));
    const std::string table = render_compare_table(rows);
    write_text(out_dir / "compare.txt", table);
    std::cout << table;
    return 0;
}

inline int cmd_fuse(const CommonArgs& args, const std::string& preset_name,
                    const std::string& subject_id) {
    RunConfig cfg = load_run_config(args.config);
    const PresetSpec* preset = cfg.find_preset(preset_name);
    if (!preset)
        throw ConfigError("preset not found: '" + preset_name + "'");
    std::vector<const SubjectSpec*> subjects;
    if (subject_id.empty()) {
        for (const auto& s : cfg.subjects)
            subjects.push_back(&s);
    } else {
        const SubjectSpec* s = cfg.find_subject(subject_id);
        if (!s)
            throw ConfigError("subject not found: '" + subject_id + "'");
        subjects.push_back(s);
    }
    if (subjects.empty())
        throw ConfigError("run config declares no subjects");
    const std::filesystem::path out_dir =
        args.out.empty() ? cfg.out_dir : std::filesystem::path(args.out);
    for (const SubjectSpec* s : subjects) {
        const FuseOutputs out = run_fuse_subject(cfg, *preset, *s, out_dir);
        std::cout << out.mask.string() << "\n";
        log(LogLevel::Info, "sidecar " + out.sidecar.string());
    }
    return 0;
}

inline int cmd_synth(const std::string& config, const std::string& out,
                     std::optional<std::uint64_t> seed_override) {
    CohortSpec spec = load_cohort_spec(config);
    if (seed_override)
        spec.seed = *seed_override;
    const GeneratedCohort cohort = generate_cohort(spec, out);
    std::cout << "cohort: " << cohort.out_dir.string() << "\n"
              << "subjects: " << spec.subjects << "\n"
              << "models: " << spec.models << "\n"
              << "run config: " << cohort.run_config.string() << "\n"
              << "manifest: " << cohort.manifest.string() << "\n";
    return 0;
}

inline int cmd_info(const std::vector<std::string>& paths) {
    for (const auto& p : paths) {
        const VolumeFileSummary s = inspect_volume(p);
        std::cout << p << "\n"
                  << "  format:        "
                  << (s.format == FileFormat::Nifti ? "NIfTI-1" : "VXF1")
                  << (s.byte_swapped ? " (byte-swapped source)" : "") << "\n"
                  << "  datatype:      " << s.datatype << "\n"
                  << "  shape:         " << s.shape.describe() << "\n"
                  << "  value range:   [" << voxfuse::detail::format_g6(s.min_value)
                  << ", " << voxfuse::detail::format_g6(s.max_value) << "]\n"
                  << "  nonzero:       " << s.nonzero << " voxels, "
                  << voxfuse::detail::format_g6(s.nonzero_volume_mm3) << " mm3\n";
    }
    return 0;
}

} // namespace detail

/// Entry point shared by the binary and the tests.
inline int run(int argc, const char* const* argv) {
    CLI::App app{"volumetric lesion mask fusion and evaluation toolkit"};
    app.set_version_flag("--version", std::string("voxfuse ") + k_version);
    app.require_subcommand(1);

    detail::CommonArgs common;

    auto* fuse_cmd =
        app.add_subcommand("fuse", "fuse model predictions into one mask");
    std::string fuse_preset, fuse_subject;
    fuse_cmd->add_option("--config", common.config, "run config file")
        ->required();
    fuse_cmd->add_option("--preset", fuse_preset, "fusion preset name")
        ->required();
    fuse_cmd->add_option("--subject", fuse_subject,
                         "subject id (default: all subjects)");
    fuse_cmd->add_option("--out", common.out, "output directory");

    auto* eval_cmd = app.add_subcommand(
        "evaluate", "evaluate every preset over the cohort");
    eval_cmd->add_option("--config", common.config, "run config file")
        ->required();
    eval_cmd->add_option("--out", common.out, "report directory");
    eval_cmd->add_option("--jobs", common.jobs, "parallel subjects");

    auto* compare_cmd =
        app.add_subcommand("compare", "rank presets by mean error rates");
    std::vector<std::string> compare_names;
    compare_cmd->add_option("--config", common.config, "run config file")
        ->required();
    compare_cmd
        ->add_option("--preset", compare_names, "preset name (repeatable)")
        ->required()
        ->expected(-2);
    compare_cmd->add_option("--out", common.out, "report directory");
    compare_cmd->add_option("--jobs", common.jobs, "parallel subjects");

    auto* synth_cmd =
        app.add_subcommand("synth", "generate a synthetic cohort");
    std::string synth_out;
    std::int64_t synth_seed = -1;
    synth_cmd->add_option("--config", common.config, "cohort spec file")
        ->required();
    synth_cmd->add_option("--out", synth_out, "cohort output directory")
        ->required();
    synth_cmd->add_option("--seed", synth_seed,
                          "override the spec's seed (>= 0)");

    auto* info_cmd = app.add_subcommand("info", "describe volume files");
    std::vector<std::string> info_paths;
    info_cmd->add_option("paths", info_paths, "volume files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(fuse_cmd))
            return detail::cmd_fuse(common, fuse_preset, fuse_subject);
        if (app.got_subcommand(eval_cmd))
            return detail::cmd_evaluate(common);
        if (app.got_subcommand(compare_cmd))
            return detail::cmd_compare(common, compare_names);
        if (app.got_subcommand(synth_cmd))
            return detail::cmd_synth(
                common.config, synth_out,
                synth_seed >= 0
                    ? std::optional<std::uint64_t>(
                          static_cast<std::uint64_t>(synth_seed))
                    : std::nullopt);
        if (app.got_subcommand(info_cmd))
            return detail::cmd_info(info_paths);
    } catch (const IoError& e) {
        log(LogLevel::Error, e.what());
        return 3;
    } catch (const Error& e) {
        log(LogLevel::Error, e.what());
        return 2;
    } catch (const std::exception& e) {
        log(LogLevel::Error, std::string("unexpected: ") + e.what());
        return 2;
    }
    return 1;
}

} // namespace voxfuse::cli

#endif
