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

#ifndef VOXFUSE_METRICS_HPP
#define VOXFUSE_METRICS_HPP

#include <cmath>
#include <optional>

#include "voxfuse/volume.hpp"

namespace voxfuse {

/// DSC, IoU, precision and recall for one prediction/reference pair.
/// The zero-denominator convention: a metric whose denominator is zero
/// scores 1.0 when both masks are empty (a correctly predicted
/// lesion-free volume is perfect) and 0.0 otherwise.
struct OverlapMetrics {
    double dsc = 0.0;
    double iou = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

inline OverlapMetrics overlap_metrics(const VoxelCounts& c) {
    const bool both_empty = (c.tp + c.fp + c.fn) == 0;
    auto ratio = [both_empty](std::uint64_t num, std::uint64_t den) {
        if (den == 0)
            return both_empty ? 1.0 : 0.0;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    OverlapMetrics m;
    m.dsc = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    m.iou = ratio(c.tp, c.tp + c.fp + c.fn);
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    return m;
}

inline OverlapMetrics overlap_metrics(const BinaryVolume& pred,
                                      const BinaryVolume& truth) {
    return overlap_metrics(count_pair(pred, truth));
}

/// Physical lesion volume: 1-voxel count times the mask's voxel volume.
inline double lesion_volume_mm3(const BinaryVolume& mask) {
    return static_cast<double>(mask.count_set()) *
           mask.shape.voxel_volume_mm3();
}

/// |pred - truth| / truth * 100. The reference must be positive;
/// a zero (or negative) reference has no defined error rate and the
/// caller is expected to flag the record and exclude it from averages.
inline double percent_error(double pred_value, double true_value) {
    if (!(true_value > 0.0))
        throw UndefinedReferenceError(
            "percent error undefined: reference value is not positive");
    return std::abs(pred_value - true_value) / true_value * 100.0;
}

/// Volumes of a prediction/reference pair plus the volume error rate.
/// er_lv is empty when the reference mask is empty (excluded record).
/// When spacings disagree the prediction's spacing is used for both
/// volumes and spacing_mismatch is set so callers can warn.
struct VolumetryRecord {
    double pred_volume_mm3 = 0.0;
    double truth_volume_mm3 = 0.0;
    std::optional<double> er_lv;
    bool spacing_mismatch = false;
};

inline VolumetryRecord volumetry(const BinaryVolume& pred,
                                 const BinaryVolume& truth) {
    require_same_counts(pred.shape, truth.shape, "volumetry");
    VolumetryRecord r;
    r.spacing_mismatch = !pred.shape.same_spacing(truth.shape);
    const double voxvol = pred.shape.voxel_volume_mm3();
    r.pred_volume_mm3 = static_cast<double>(pred.count_set()) * voxvol;
    r.truth_volume_mm3 = static_cast<double>(truth.count_set()) * voxvol;
    if (r.truth_volume_mm3 > 0.0)
        r.er_lv = percent_error(r.pred_volume_mm3, r.truth_volume_mm3);
    return r;
}

} // namespace voxfuse

#endif
