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

#ifndef VOXFUSE_LESION_LOAD_HPP
#define VOXFUSE_LESION_LOAD_HPP

#include <string_view>

#include "voxfuse/volume.hpp"

namespace voxfuse {

// Weighted lesion load against a canonical tract map (e.g. the
// corticospinal tract), per hemisphere, with Small/Medium/Large severity
// categorization.
//
// Two load measures are exposed because published lesion-load studies
// differ in normalization:
//   raw_overlap_cc : sum of tract weight over lesion voxels, scaled by
//                    voxel volume, in cubic centimeters
//   normalized     : same weighted overlap divided by the tract's total
//                    weight, a dimensionless fraction in [0, 1]

struct LesionLoad {
    double raw_overlap_cc = 0.0;
    double normalized = 0.0;
};

inline double total_weight(const WeightedVolume& tract) {
    double s = 0.0;
    for (float v : tract.data)
        s += v;
    return s;
}

/// Weighted overlap of a lesion with a tract map. Throws when the tract
/// is all-zero (the normalized load would be 0/0); use total_weight to
/// guard when a zero tract is an expected case.
inline LesionLoad weighted_lesion_load(const BinaryVolume& lesion,
                                       const WeightedVolume& tract) {
    require_same_counts(lesion.shape, tract.shape, "weighted_lesion_load");
    double overlap = 0.0;
    double tract_sum = 0.0;
    const std::size_t n = lesion.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double w = tract.data[i];
        tract_sum += w;
        if (lesion.data[i])
            overlap += w;
    }
    if (!(tract_sum > 0.0))
        throw InvalidArgumentError(
            "weighted_lesion_load: tract map is all-zero, normalized load "
            "undefined");
    LesionLoad load;
    load.raw_overlap_cc =
        overlap * lesion.shape.voxel_volume_mm3() / 1000.0;
    load.normalized = overlap / tract_sum;
    return load;
}

enum class Severity { Small = 0, Medium = 1, Large = 2 };

inline std::string_view to_string(Severity s) {
    switch (s) {
    case Severity::Small:
        return "Small";
    case Severity::Medium:
        return "Medium";
    default:
        return "Large";
    }
}

/// Category cutoffs in the units of the chosen load measure. The
/// compiled-in defaults (0.5 / 2.0 cc) are tool defaults with no
/// clinical validation behind them; reports flag them accordingly and
/// cohorts should configure their own.
struct SeverityThresholds {
    double t1 = 0.5;
    double t2 = 2.0;

    void validate() const {
        if (!(t1 > 0.0) || !(t2 > t1))
            throw InvalidArgumentError(
                "severity thresholds must satisfy 0 < t1 < t2");
    }
};

/// Small iff load < t1; Medium iff t1 <= load < t2; Large iff load >= t2.
/// Boundary values land in the higher category, biasing toward
/// overestimation rather than missing impact.
inline Severity categorize(double load_value, const SeverityThresholds& th) {
    th.validate();
    if (load_value >= th.t2)
        return Severity::Large;
    if (load_value >= th.t1)
        return Severity::Medium;
    return Severity::Small;
}

/// Maps the x axis halves to anatomical sides. Neurological convention
/// names the low-x half "left"; radiological flips it. Orientation
/// metadata is never interpreted, so the convention is a run-level
/// configuration choice.
enum class SideConvention { Neurological, Radiological };

inline std::string_view to_string(SideConvention c) {
    return c == SideConvention::Neurological ? "neurological" : "radiological";
}

struct HemispherePair {
    WeightedVolume left;
    WeightedVolume right;
};

/// Midsagittal split at x = nx/2: voxels with x < nx/2 form one half,
/// x >= nx/2 the other. Each half keeps the full grid shape with the
/// opposite side zeroed, so loads can be computed against either half
/// directly. For odd nx the midplane column goes to the high-x half.
inline HemispherePair hemisphere_split(const WeightedVolume& tract,
                                       SideConvention convention) {
    const GridShape& s = tract.shape;
    const int mid = s.nx / 2;
    WeightedVolume low(s), high(s);
    for (int z = 0; z < s.nz; ++z)
        for (int y = 0; y < s.ny; ++y)
            for (int x = 0; x < s.nx; ++x) {
                const std::size_t i = s.index(x, y, z);
                if (x < mid)
                    low.data[i] = tract.data[i];
                else
                    high.data[i] = tract.data[i];
            }
    if (convention == SideConvention::Neurological)
        return HemispherePair{std::move(low), std::move(high)};
    return HemispherePair{std::move(high), std::move(low)};
}

} // namespace voxfuse

#endif
