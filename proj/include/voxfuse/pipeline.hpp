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

#ifndef VOXFUSE_PIPELINE_HPP
#define VOXFUSE_PIPELINE_HPP

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "voxfuse/config.hpp"
#include "voxfuse/ensemble.hpp"
#include "voxfuse/io.hpp"
#include "voxfuse/lesion_load.hpp"
#include "voxfuse/metrics.hpp"
#include "voxfuse/regions.hpp"
#include "voxfuse/synthetic.hpp"

namespace voxfuse {

// Per-subject pipeline orchestration and cohort reporting. A cohort
// evaluation produces one MetricsRecord per (subject, preset); errors in
// one subject degrade to flagged rows so batch runs always complete.
// Row order, mean accumulation order and number formatting are all fixed,
// so reports are byte-identical regardless of the parallelism degree.

/// One report row.
struct MetricsRecord {
    std::string subject;
    std::string preset;
    bool error = false;
    std::string error_message;
    std::optional<OverlapMetrics> overlap;
    std::optional<double> pred_volume_mm3, truth_volume_mm3;
    std::optional<double> er_lv;
    std::string side;
    std::optional<double> pred_load_cc, truth_load_cc;
    std::optional<double> pred_load_norm, truth_load_norm;
    std::optional<double> er_ll_raw, er_ll_norm;
    std::optional<Severity> pred_category, truth_category;
    std::vector<std::string> flags;
};

/// Cohort aggregate for one preset. Means are arithmetic means over the
/// non-excluded subjects; exclusion counts say how many rows were left
/// out and why. The 3x3 category confusion tally plus the undefined
/// bucket always sums to the subject count.
struct PresetSummary {
    std::string preset;
    int subjects = 0;
    int error_rows = 0;
    std::optional<double> mean_dsc, mean_iou, mean_precision, mean_recall;
    std::optional<double> mean_pred_volume, mean_truth_volume;
    std::optional<double> mean_er_lv;
    int excluded_er_lv = 0;
    std::optional<double> mean_pred_load, mean_truth_load;
    std::optional<double> mean_er_ll_raw, mean_er_ll_norm;
    int excluded_er_ll = 0;
    int confusion[3][3] = {};
    int confusion_undefined = 0;
    int category_matches = 0;
    int category_over = 0;  ///< predicted category above truth
    int category_under = 0; ///< predicted category below truth
};

struct CohortReport {
    std::vector<MetricsRecord> rows;
    std::vector<PresetSummary> summaries;
    SeverityThresholds thresholds;
    LoadMeasure category_measure = LoadMeasure::RawCc;
    SideConvention side_convention = SideConvention::Neurological;
};

namespace detail {

/// "%.6g" with negative zero normalized away; the single formatting
/// route shared by the CSV and the text table.
inline std::string format_g6(double v) {
    if (v == 0.0)
        v = 0.0;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string format_opt(const std::optional<double>& v) {
    return v ? format_g6(*v) : std::string();
}

inline std::string format_category(const std::optional<Severity>& c) {
    return c ? std::string(to_string(*c)) : std::string();
}

/// Flags are ';'-joined into one CSV field; strip the characters that
/// would break the unquoted format.
inline std::string sanitize_flag(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == ';')
            c = ' ';
    return s;
}

inline double weighted_overlap(const BinaryVolume& mask,
                               const WeightedVolume& weights) {
    double s = 0.0;
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        if (mask.data[i])
            s += weights.data[i];
    return s;
}

struct EvalContext {
    const RunConfig* cfg = nullptr;
    std::optional<AtlasVolume> atlas;
    WeightedVolume tract;
    HemispherePair hemis;
    double left_total = 0.0, right_total = 0.0;
};

inline BinaryVolume apply_preset(const PresetSpec& preset,
                                 const std::map<std::string, BinaryVolume>& masks,
                                 const std::optional<AtlasVolume>& atlas) {
    if (!preset.regionwise)
        return fuse_apply(preset.whole, masks);
    if (!atlas)
        throw InvalidArgumentError("regionwise preset '" + preset.name +
                                   "' requires an atlas");
    std::vector<std::pair<RegionSet, BinaryVolume>> parts;
    parts.reserve(preset.groups.size());
    for (const auto& group : preset.groups)
        parts.emplace_back(group.regions, fuse_apply(group.spec, masks));
    return compose_regionwise(parts, *atlas);
}

inline void fill_load_fields(MetricsRecord& row, const BinaryVolume& fused,
                             const BinaryVolume& truth,
                             const EvalContext& ctx) {
    // loads are evaluated on the hemisphere the reference lesion
    // affects most (larger raw load; ties go left)
    const double truth_left = weighted_overlap(truth, ctx.hemis.left);
    const double truth_right = weighted_overlap(truth, ctx.hemis.right);
    const bool left_side = truth_left >= truth_right;
    const WeightedVolume& side_tract =
        left_side ? ctx.hemis.left : ctx.hemis.right;
    const double side_total = left_side ? ctx.left_total : ctx.right_total;
    row.side = left_side ? "left" : "right";

    const double cc_per_weight = fused.shape.voxel_volume_mm3() / 1000.0;
    const double pred_overlap = weighted_overlap(fused, side_tract);
    const double truth_overlap = left_side ? truth_left : truth_right;
    row.pred_load_cc = pred_overlap * cc_per_weight;
    row.truth_load_cc = truth_overlap * cc_per_weight;
    if (side_total > 0.0) {
        row.pred_load_norm = pred_overlap / side_total;
        row.truth_load_norm = truth_overlap / side_total;
    } else {
        row.flags.push_back("normalized_load_undefined_zero_tract_side");
    }
    if (*row.truth_load_cc > 0.0) {
        row.er_ll_raw = percent_error(*row.pred_load_cc, *row.truth_load_cc);
        row.er_ll_norm = row.er_ll_raw; // same ratio, different scale
    } else {
        row.flags.push_back("er_ll_excluded_zero_truth_load");
    }

    const auto& th = ctx.cfg->thresholds;
    if (ctx.cfg->category_measure == LoadMeasure::RawCc) {
        row.pred_category = categorize(*row.pred_load_cc, th);
        row.truth_category = categorize(*row.truth_load_cc, th);
    } else if (row.pred_load_norm) {
        row.pred_category = categorize(*row.pred_load_norm, th);
        row.truth_category = categorize(*row.truth_load_norm, th);
    } else {
        row.flags.push_back("category_undefined");
    }
}

inline MetricsRecord evaluate_pair(const std::string& subject,
                                   const std::string& preset,
                                   const BinaryVolume& fused,
                                   const BinaryVolume& truth,
                                   const EvalContext& ctx) {
    MetricsRecord row;
    row.subject = subject;
    row.preset = preset;
    row.overlap = overlap_metrics(fused, truth);
    const VolumetryRecord vol = volumetry(fused, truth);
    row.pred_volume_mm3 = vol.pred_volume_mm3;
    row.truth_volume_mm3 = vol.truth_volume_mm3;
    if (vol.spacing_mismatch)
        row.flags.push_back("spacing_mismatch_pred_spacing_used");
    if (vol.er_lv)
        row.er_lv = vol.er_lv;
    else
        row.flags.push_back("er_lv_excluded_empty_truth");
    fill_load_fields(row, fused, truth, ctx);
    return row;
}

inline std::vector<MetricsRecord> evaluate_subject(const SubjectSpec& subject,
                                                   const EvalContext& ctx) {
    const RunConfig& cfg = *ctx.cfg;
    std::vector<MetricsRecord> rows;
    rows.reserve(cfg.presets.size());

    std::optional<BinaryVolume> truth;
    std::string truth_error;
    try {
        truth = read_binary_volume(subject.truth);
        require_same_counts(truth->shape, ctx.tract.shape,
                            "truth vs tract map");
    } catch (const Error& e) {
        truth_error = e.what();
    }

    std::map<std::string, BinaryVolume> cache;
    auto member_masks = [&](const PresetSpec& preset) {
        std::map<std::string, BinaryVolume> masks;
        for (const auto& id : preset.member_ids()) {
            if (!cache.count(id)) {
                const auto* found = [&]() -> const std::filesystem::path* {
                    for (const auto& [model, path] : subject.predictions)
                        if (model == id)
                            return &path;
                    return nullptr;
                }();
                if (!found)
                    throw InvalidArgumentError("subject " + subject.id +
                                               " has no prediction for "
                                               "model '" + id + "'");
                BinaryVolume m = read_binary_volume(*found);
                require_same_counts(m.shape, truth->shape,
                                    ("prediction '" + id + "'").c_str());
                cache.emplace(id, std::move(m));
            }
            masks.emplace(id, cache.at(id));
        }
        return masks;
    };

    for (const auto& preset : cfg.presets) {
        MetricsRecord row;
        row.subject = subject.id;
        row.preset = preset.name;
        if (!truth_error.empty()) {
            row.error = true;
            row.error_message = truth_error;
            row.flags.push_back("error");
        } else {
            try {
                const BinaryVolume fused =
                    apply_preset(preset, member_masks(preset), ctx.atlas);
                row = evaluate_pair(subject.id, preset.name, fused, *truth,
                                    ctx);
            } catch (const Error& e) {
                row.error = true;
                row.error_message = e.what();
                row.flags.assign(1, "error");
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline PresetSummary summarize_preset(const std::string& preset,
                                      const std::vector<MetricsRecord>& rows) {
    PresetSummary s;
    s.preset = preset;
    struct Acc {
        double sum = 0.0;
        int n = 0;
        void add(const std::optional<double>& v) {
            if (v) {
                sum += *v;
                ++n;
            }
        }
        std::optional<double> mean() const {
            if (n == 0)
                return std::nullopt;
            return sum / n;
        }
    };
    Acc dsc, iou, prec, rec, pv, tv, er_lv, pl, tl, er_raw, er_norm;
    for (const auto& row : rows) {
        if (row.preset != preset)
            continue;
        ++s.subjects;
        if (row.error) {
            ++s.error_rows;
            ++s.confusion_undefined;
            continue;
        }
        if (row.overlap) {
            dsc.add(row.overlap->dsc);
            iou.add(row.overlap->iou);
            prec.add(row.overlap->precision);
            rec.add(row.overlap->recall);
        }
        pv.add(row.pred_volume_mm3);
        tv.add(row.truth_volume_mm3);
        if (row.er_lv)
            er_lv.add(row.er_lv);
        else
            ++s.excluded_er_lv;
        pl.add(row.pred_load_cc);
        tl.add(row.truth_load_cc);
        if (row.er_ll_raw) {
            er_raw.add(row.er_ll_raw);
            er_norm.add(row.er_ll_norm);
        } else {
            ++s.excluded_er_ll;
        }
        if (row.pred_category && row.truth_category) {
            const int t = static_cast<int>(*row.truth_category);
            const int p = static_cast<int>(*row.pred_category);
            ++s.confusion[t][p];
            if (t == p)
                ++s.category_matches;
            else if (p > t)
                ++s.category_over;
            else
                ++s.category_under;
        } else {
            ++s.confusion_undefined;
        }
    }
    s.mean_dsc = dsc.mean();
    s.mean_iou = iou.mean();
    s.mean_precision = prec.mean();
    s.mean_recall = rec.mean();
    s.mean_pred_volume = pv.mean();
    s.mean_truth_volume = tv.mean();
    s.mean_er_lv = er_lv.mean();
    s.mean_pred_load = pl.mean();
    s.mean_truth_load = tl.mean();
    s.mean_er_ll_raw = er_raw.mean();
    s.mean_er_ll_norm = er_norm.mean();
    return s;
}

} // namespace detail

/// Evaluates every preset over every subject. `jobs_override` > 0 wins
/// over the configured degree. Rows come back sorted by subject id then
/// preset name; the result is identical for any parallelism degree.
inline CohortReport evaluate_cohort(const RunConfig& cfg,
                                    int jobs_override = 0) {
    if (cfg.subjects.empty())
        throw ConfigError("run config declares no subjects");
    if (cfg.presets.empty())
        throw ConfigError("run config declares no presets");
    if (!cfg.tract)
        throw ConfigError("run config declares no tract map (required for "
                          "lesion load evaluation)");

    detail::EvalContext ctx;
    ctx.cfg = &cfg;
    if (cfg.atlas)
        ctx.atlas = read_atlas_volume(*cfg.atlas);
    ctx.tract = read_weighted_volume(*cfg.tract);
    ctx.hemis = hemisphere_split(ctx.tract, cfg.side_convention);
    ctx.left_total = total_weight(ctx.hemis.left);
    ctx.right_total = total_weight(ctx.hemis.right);

    const std::size_t n = cfg.subjects.size();
    std::vector<std::vector<MetricsRecord>> per_subject(n);
    const int jobs = jobs_override > 0 ? jobs_override : cfg.jobs;
    const unsigned workers =
        static_cast<unsigned>(std::clamp<std::size_t>(jobs, 1, n));

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        try {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load())
                    break;
                per_subject[i] = detail::evaluate_subject(cfg.subjects[i], ctx);
            }
        } catch (...) {
            if (!failed.exchange(true))
                first_error = std::current_exception();
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    if (first_error)
        std::rethrow_exception(first_error);

    CohortReport report;
    report.thresholds = cfg.thresholds;
    report.category_measure = cfg.category_measure;
    report.side_convention = cfg.side_convention;
    for (auto& rows : per_subject)
        for (auto& row : rows)
            report.rows.push_back(std::move(row));
    std::sort(report.rows.begin(), report.rows.end(),
              [](const MetricsRecord& a, const MetricsRecord& b) {
                  if (a.subject != b.subject)
                      return a.subject < b.subject;
                  return a.preset < b.preset;
              });

    std::vector<std::string> preset_names;
    for (const auto& p : cfg.presets)
        preset_names.push_back(p.name);
    std::sort(preset_names.begin(), preset_names.end());
    for (const auto& name : preset_names)
        report.summaries.push_back(detail::summarize_preset(name, report.rows));
    return report;
}

inline constexpr const char* k_report_csv_header =
    "subject,preset,dsc,iou,precision,recall,pred_volume_mm3,"
    "truth_volume_mm3,er_lv,side,pred_load_cc,truth_load_cc,er_ll_raw,"
    "pred_load_norm,truth_load_norm,er_ll_norm,pred_category,"
    "truth_category,flags";

namespace detail {

inline std::vector<std::string> csv_fields(const MetricsRecord& r) {
    std::string flags;
    for (const auto& f : r.flags) {
        if (!flags.empty())
            flags += ";";
        flags += sanitize_flag(f);
    }
    if (r.error && !r.error_message.empty())
        flags += (flags.empty() ? "" : ";") + sanitize_flag(r.error_message);
    return {
        r.subject,
        r.preset,
        r.overlap ? format_g6(r.overlap->dsc) : "",
        r.overlap ? format_g6(r.overlap->iou) : "",
        r.overlap ? format_g6(r.overlap->precision) : "",
        r.overlap ? format_g6(r.overlap->recall) : "",
        format_opt(r.pred_volume_mm3),
        format_opt(r.truth_volume_mm3),
        format_opt(r.er_lv),
        r.side,
        format_opt(r.pred_load_cc),
        format_opt(r.truth_load_cc),
        format_opt(r.er_ll_raw),
        format_opt(r.pred_load_norm),
        format_opt(r.truth_load_norm),
        format_opt(r.er_ll_norm),
        format_category(r.pred_category),
        format_category(r.truth_category),
        flags,
    };
}

inline std::vector<std::string> csv_fields(const PresetSummary& s) {
    std::string flags = "excluded_er_lv=" + std::to_string(s.excluded_er_lv) +
                        ";excluded_er_ll=" + std::to_string(s.excluded_er_ll) +
                        ";error_rows=" + std::to_string(s.error_rows);
    return {
        "MEAN",
        s.preset,
        format_opt(s.mean_dsc),
        format_opt(s.mean_iou),
        format_opt(s.mean_precision),
        format_opt(s.mean_recall),
        format_opt(s.mean_pred_volume),
        format_opt(s.mean_truth_volume),
        format_opt(s.mean_er_lv),
        "",
        format_opt(s.mean_pred_load),
        format_opt(s.mean_truth_load),
        format_opt(s.mean_er_ll_raw),
        "",
        "",
        format_opt(s.mean_er_ll_norm),
        "",
        "",
        flags,
    };
}

inline std::string join_csv(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            line += ",";
        line += fields[i];
    }
    return line;
}

} // namespace detail

/// The per-subject rows followed by one MEAN row per preset. LF line
/// endings, '.' decimal separator, 6 significant digits.
inline std::string render_report_csv(const CohortReport& report) {
    std::string out = std::string(k_report_csv_header) + "\n";
    for (const auto& row : report.rows)
        out += detail::join_csv(detail::csv_fields(row)) + "\n";
    for (const auto& s : report.summaries)
        out += detail::join_csv(detail::csv_fields(s)) + "\n";
    return out;
}

/// Category confusion tally: all nine truth x predicted cells per preset
/// plus the bucket of rows without categories, which makes each preset's
/// counts sum to the subject count.
inline std::string render_confusion_csv(const CohortReport& report) {
    std::string out = "preset,truth_category,pred_category,count\n";
    static constexpr const char* names[3] = {"Small", "Medium", "Large"};
    for (const auto& s : report.summaries) {
        for (int t = 0; t < 3; ++t)
            for (int p = 0; p < 3; ++p)
                out += s.preset + "," + names[t] + "," + names[p] + "," +
                       std::to_string(s.confusion[t][p]) + "\n";
        out += s.preset + ",undefined,undefined," +
               std::to_string(s.confusion_undefined) + "\n";
    }
    return out;
}

namespace detail {

inline std::string render_aligned(const std::vector<std::string>& header,
                                  const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c)
        width[c] = header[c].size();
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c)
            width[c] = std::max(width[c], row[c].size());
    std::string out;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c)
                out += "  ";
            out += cells[c];
            if (c + 1 < cells.size())
                out.append(width[c] - cells[c].size(), ' ');
        }
        out += "\n";
    };
    emit(header);
    for (const auto& row : rows)
        emit(row);
    return out;
}

inline std::vector<std::string> split_csv_header() {
    std::vector<std::string> cols;
    std::istringstream in(k_report_csv_header);
    std::string c;
    while (std::getline(in, c, ','))
        cols.push_back(c);
    return cols;
}

} // namespace detail

/// Aligned text rendering of the same rows; every cell reuses the exact
/// string that appears in the CSV.
inline std::string render_report_table(const CohortReport& report) {
    std::ostringstream head;
    head << "# voxfuse cohort report\n"
         << "# severity thresholds: t1=" << detail::format_g6(report.thresholds.t1)
         << " t2=" << detail::format_g6(report.thresholds.t2) << " ("
         << to_string(report.category_measure)
         << "); tool defaults are not clinically validated cutoffs,"
            " configure them per cohort\n"
         << "# side convention: " << to_string(report.side_convention) << "\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : report.rows)
        rows.push_back(detail::csv_fields(row));
    for (const auto& s : report.summaries)
        rows.push_back(detail::csv_fields(s));
    std::string out = head.str();
    out += detail::render_aligned(detail::split_csv_header(), rows);
    out += "\n";
    static constexpr const char* names[3] = {"Small", "Medium", "Large"};
    for (const auto& s : report.summaries) {
        out += "category confusion for preset " + s.preset +
               " (rows: truth, cols: predicted)\n";
        std::vector<std::vector<std::string>> cells;
        for (int t = 0; t < 3; ++t) {
            std::vector<std::string> row{names[t]};
            for (int p = 0; p < 3; ++p)
                row.push_back(std::to_string(s.confusion[t][p]));
            cells.push_back(std::move(row));
        }
        cells.push_back({"undefined", std::to_string(s.confusion_undefined),
                         "", ""});
        out += detail::render_aligned({"", "Small", "Medium", "Large"}, cells);
    }
    return out;
}

/// One ranking row of the preset comparison.
struct CompareRow {
    std::string preset;
    int subjects = 0;
    int error_rows = 0;
    std::optional<double> mean_dsc, mean_er_lv, mean_er_ll;
    int excluded_er_ll = 0;
};

/// Ranks the named presets by mean lesion-load error rate ascending,
/// ties broken by mean DSC descending then preset name. Presets without
/// a defined mean ER LL sort last.
inline std::vector<CompareRow>
compare_presets(const CohortReport& report,
                const std::vector<std::string>& preset_names) {
    if (preset_names.size() < 2)
        throw InvalidArgumentError("compare needs at least two presets");
    std::vector<CompareRow> rows;
    for (const auto& name : preset_names) {
        const PresetSummary* found = nullptr;
        for (const auto& s : report.summaries)
            if (s.preset == name)
                found = &s;
        if (!found)
            throw ConfigError("preset not found in report: '" + name + "'");
        CompareRow r;
        r.preset = found->preset;
        r.subjects = found->subjects;
        r.error_rows = found->error_rows;
        r.mean_dsc = found->mean_dsc;
        r.mean_er_lv = found->mean_er_lv;
        r.mean_er_ll = found->mean_er_ll_raw;
        r.excluded_er_ll = found->excluded_er_ll;
        rows.push_back(std::move(r));
    }
    std::sort(rows.begin(), rows.end(),
              [](const CompareRow& a, const CompareRow& b) {
                  const double ea = a.mean_er_ll.value_or(
                      std::numeric_limits<double>::infinity());
                  const double eb = b.mean_er_ll.value_or(
                      std::numeric_limits<double>::infinity());
                  if (ea != eb)
                      return ea < eb;
                  const double da = a.mean_dsc.value_or(-1.0);
                  const double db = b.mean_dsc.value_or(-1.0);
                  if (da != db)
                      return da > db;
                  return a.preset < b.preset;
              });
    return rows;
}

inline constexpr const char* k_compare_csv_header =
    "preset,mean_dsc,mean_er_lv,mean_er_ll,subjects,error_rows,"
    "excluded_er_ll";

inline std::string render_compare_csv(const std::vector<CompareRow>& rows) {
    std::string out = std::string(k_compare_csv_header) + "\n";
    for (const auto& r : rows) {
        out += r.preset + "," + detail::format_opt(r.mean_dsc) + "," +
               detail::format_opt(r.mean_er_lv) + "," +
               detail::format_opt(r.mean_er_ll) + "," +
               std::to_string(r.subjects) + "," +
               std::to_string(r.error_rows) + "," +
               std::to_string(r.excluded_er_ll) + "\n";
    }
    return out;
}

inline std::string render_compare_table(const std::vector<CompareRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows)
        cells.push_back({r.preset, detail::format_opt(r.mean_dsc),
                         detail::format_opt(r.mean_er_lv),
                         detail::format_opt(r.mean_er_ll),
                         std::to_string(r.subjects),
                         std::to_string(r.error_rows),
                         std::to_string(r.excluded_er_ll)});
    return detail::render_aligned({"preset", "mean_dsc", "mean_er_lv",
                                   "mean_er_ll", "subjects", "error_rows",
                                   "excluded_er_ll"},
                                  cells);
}

/// Paths written by one fuse invocation.
struct FuseOutputs {
    std::filesystem::path mask;
    std::filesystem::path sidecar;
};

/// Fuses one subject with one preset, writes the mask as NIfTI-1 plus a
/// JSON provenance sidecar (inputs, parameters, tool version), and
/// carries the first member's orientation metadata through.
inline FuseOutputs run_fuse_subject(const RunConfig& cfg,
                                    const PresetSpec& preset,
                                    const SubjectSpec& subject,
                                    const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + out_dir.string() +
                      "': " + ec.message());

    std::map<std::string, BinaryVolume> masks;
    nlohmann::ordered_json member_paths = nlohmann::ordered_json::object();
    NiftiOrientation orientation{};
    bool have_orientation = false;
    for (const auto& id : preset.member_ids()) {
        const std::filesystem::path* path = nullptr;
        for (const auto& [model, p] : subject.predictions)
            if (model == id)
                path = &p;
        if (!path)
            throw ConfigError("subject " + subject.id +
                              " has no prediction for model '" + id + "'");
        ReadInfo info;
        masks.emplace(id, read_binary_volume(*path, &info));
        if (!have_orientation && info.format == FileFormat::Nifti) {
            orientation = info.orientation;
            have_orientation = true;
        }
        member_paths[id] = path->string();
    }

    std::optional<AtlasVolume> atlas;
    if (preset.regionwise) {
        if (!cfg.atlas)
            throw ConfigError("regionwise preset '" + preset.name +
                              "' requires an atlas path in the config");
        atlas = read_atlas_volume(*cfg.atlas);
    }
    const BinaryVolume fused = detail::apply_preset(preset, masks, atlas);

    FuseOutputs out;
    out.mask = out_dir / (subject.id + "__" + preset.name + ".nii");
    out.sidecar = out_dir / (subject.id + "__" + preset.name + ".json");
    write_nifti(fused, out.mask, NiftiDatatype::Uint8,
                have_orientation ? &orientation : nullptr);

    nlohmann::ordered_json side;
    side["tool"] = "voxfuse";
    side["version"] = k_version;
    side["subject"] = subject.id;
    side["preset"] = preset.name;
    if (preset.regionwise) {
        side["method"] = "regionwise";
        nlohmann::ordered_json groups = nlohmann::ordered_json::array();
        for (const auto& g : preset.groups) {
            nlohmann::ordered_json jg;
            jg["regions"] = g.regions.name();
            jg["method"] = g.spec.method == FusionMethod::Stack
                               ? "stack"
                               : "agreement_window";
            jg["members"] = g.spec.members;
            if (g.spec.method == FusionMethod::AgreementWindow) {
                jg["window"] = g.spec.window;
                jg["overlap_threshold"] = g.spec.overlap_threshold;
                jg["stride"] = g.spec.stride;
            }
            groups.push_back(std::move(jg));
        }
        side["groups"] = std::move(groups);
        side["atlas"] = cfg.atlas->string();
    } else {
        side["method"] = preset.whole.method == FusionMethod::Stack
                             ? "stack"
                             : "agreement_window";
        if (preset.whole.method == FusionMethod::AgreementWindow) {
            side["window"] = preset.whole.window;
            side["overlap_threshold"] = preset.whole.overlap_threshold;
            side["stride"] = preset.whole.stride;
        }
    }
    side["inputs"] = std::move(member_paths);
    side["truth"] = subject.truth.string();
    side["output"] = out.mask.filename().string();

    std::ofstream js(out.sidecar);
    if (!js)
        throw IoError("cannot open '" + out.sidecar.string() +
                      "' for writing");
    js << side.dump(2) << "\n";
    if (!js.good())
        throw IoError("failed writing '" + out.sidecar.string() + "'");
    return out;
}

/// Everything cmd synth materializes.
struct GeneratedCohort {
    std::filesystem::path out_dir;
    std::filesystem::path run_config;
    std::filesystem::path manifest;
    std::vector<std::string> files; ///< relative paths, run.cfg included
};

/// Materializes a synthetic cohort: shared phantom atlas and tract, one
/// ground-truth lesion plus `models` degraded predictions per subject, a
/// ready-to-run evaluation config (presets: one per single model, an
/// all-member stack, and an all-member agreement window w=3 tau=0.5),
/// and a manifest listing every written file and every seed. Output is
/// byte-identical for identical specs.
inline GeneratedCohort generate_cohort(const CohortSpec& spec,
                                       const std::filesystem::path& out_dir) {
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + out_dir.string() +
                      "': " + ec.message());

    GeneratedCohort result;
    result.out_dir = out_dir;

    const AtlasVolume atlas = phantom_atlas(spec.shape);
    const WeightedVolume tract = phantom_tract(spec.shape);
    const BinaryVolume brain = brain_mask(atlas);
    write_nifti(atlas, out_dir / "atlas.nii");
    write_nifti(tract, out_dir / "tract.nii");
    result.files.push_back("atlas.nii");
    result.files.push_back("tract.nii");
    result.files.push_back("run.cfg");

    std::vector<std::string> model_names;
    for (int m = 1; m <= spec.models; ++m)
        model_names.push_back("m" + std::to_string(m));

    Rng master(spec.seed);
    std::vector<std::uint64_t> subject_seeds(spec.subjects);
    for (auto& s : subject_seeds)
        s = master.next_u64();

    const double tx = 0.28 * spec.shape.nx;
    const double ty = 0.5 * spec.shape.ny;

    std::ostringstream manifest;
    manifest << "generator = voxfuse " << k_version << "\n"
             << "seed = " << spec.seed << "\n"
             << "subjects = " << spec.subjects << "\n"
             << "models = " << spec.models << "\n"
             << "file = atlas.nii\n"
             << "file = tract.nii\n"
             << "file = run.cfg\n";

    std::ostringstream subjects_cfg;
    char idbuf[16];
    for (int i = 0; i < spec.subjects; ++i) {
        std::snprintf(idbuf, sizeof idbuf, "s%04d", i + 1);
        const std::string id = idbuf;
        Rng srng(subject_seeds[i]);

        BinaryVolume lesion;
        bool placed = false;
        for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
            PhantomSpec ps;
            ps.shape = spec.shape;
            double rx = srng.uniform(spec.lesion_radius_min,
                                     spec.lesion_radius_max);
            double ry = srng.uniform(spec.lesion_radius_min,
                                     spec.lesion_radius_max);
            double rz = srng.uniform(spec.lesion_radius_min,
                                     spec.lesion_radius_max);
            rz = std::min(rz, (spec.shape.nz - 1) / 2.0 - 1.0);
            double cx = tx + srng.uniform(-0.06 * spec.shape.nx,
                                          0.06 * spec.shape.nx);
            double cy = ty + srng.uniform(-0.06 * spec.shape.ny,
                                          0.06 * spec.shape.ny);
            double cz = srng.uniform(rz + 0.5, spec.shape.nz - 1 - rz - 0.5);
            cx = std::clamp(cx, rx, spec.shape.nx - 1 - rx);
            cy = std::clamp(cy, ry, spec.shape.ny - 1 - ry);
            const int label = atlas.at(static_cast<int>(std::llround(cx)),
                                       static_cast<int>(std::llround(cy)),
                                       static_cast<int>(std::llround(cz)));
            if (label == 0)
                continue;
            ps.lesion_center = {cx, cy, cz};
            ps.lesion_radii = {rx, ry, rz};
            ps.target_region = label;
            try {
                BinaryVolume candidate = phantom_lesion(ps, atlas);
                if (detail::weighted_overlap(candidate, tract) > 0.0) {
                    lesion = std::move(candidate);
                    placed = true;
                }
            } catch (const InvalidArgumentError&) {
                // ellipsoid missed its region; redraw
            }
        }
        if (!placed)
            throw Error("cohort generation: could not place a lesion for "
                        "subject " + id);

        const std::filesystem::path subject_dir = out_dir / id;
        std::filesystem::create_directories(subject_dir, ec);
        if (ec)
            throw IoError("cannot create directory '" + subject_dir.string() +
                          "': " + ec.message());
        write_nifti(lesion, subject_dir / "truth.nii");

        manifest << "subject = " << id << "\n"
                 << "subject." << id << ".seed = " << subject_seeds[i] << "\n"
                 << "subject." << id << ".file = " << id << "/truth.nii\n";
        subjects_cfg << "subject = " << id << "\n"
                     << "subject." << id << ".truth = " << id << "/truth.nii\n";

        for (const auto& model : model_names) {
            NoiseSpec noise = spec.noise;
            noise.seed = srng.next_u64();
            const BinaryVolume pred = degrade(lesion, noise, &brain);
            const std::string fname = "pred_" + model + ".nii";
            write_nifti(pred, subject_dir / fname);
            manifest << "subject." << id << ".file = " << id << "/" << fname
                     << "\n";
            subjects_cfg << "subject." << id << ".pred." << model << " = "
                         << id << "/" << fname << "\n";
            result.files.push_back(id + "/" + fname);
        }
        result.files.push_back(id + "/truth.nii");
    }

    std::ostringstream cfg;
    cfg << "# evaluation run over a voxfuse synthetic cohort\n"
        << "atlas = atlas.nii\n"
        << "tract = tract.nii\n"
        << "out_dir = reports\n"
        << "jobs = 4\n"
        << "severity.t1 = 0.5\n"
        << "severity.t2 = 2\n"
        << "severity.measure = raw_cc\n"
        << "side.convention = neurological\n"
        << "\n";
    for (const auto& model : model_names) {
        cfg << "preset = only_" << model << "\n"
            << "preset.only_" << model << ".method = stack\n"
            << "preset.only_" << model << ".member = " << model << "\n";
    }
    cfg << "preset = stack\n"
        << "preset.stack.method = stack\n";
    for (const auto& model : model_names)
        cfg << "preset.stack.member = " << model << "\n";
    cfg << "preset = aw\n"
        << "preset.aw.method = agreement_window\n";
    for (const auto& model : model_names)
        cfg << "preset.aw.member = " << model << "\n";
    cfg << "preset.aw.window = 3\n"
        << "preset.aw.threshold = 0.5\n"
        << "preset.aw.stride = 1\n"
        << "\n"
        << subjects_cfg.str();

    result.run_config = out_dir / "run.cfg";
    {
        std::ofstream f(result.run_config, std::ios::binary);
        if (!f)
            throw IoError("cannot write '" + result.run_config.string() + "'");
        f << cfg.str();
    }
    result.manifest = out_dir / "manifest.txt";
    {
        std::ofstream f(result.manifest, std::ios::binary);
        if (!f)
            throw IoError("cannot write '" + result.manifest.string() + "'");
        f << manifest.str();
    }
    return result;
}

} // namespace voxfuse

#endif
