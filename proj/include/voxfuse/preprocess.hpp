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

#ifndef VOXFUSE_PREPROCESS_HPP
#define VOXFUSE_PREPROCESS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "voxfuse/volume.hpp"

namespace voxfuse {

// Deterministic preprocessing toward the canonical 256x256x128 working
// grid: resampling, min-max intensity normalization, mask binarization
// and axial slicing.

enum class Interpolation { Nearest, Trilinear };

/// Maps a source grid onto a target grid. Spacing of the output is
/// rescaled per axis so the physical extent is preserved.
struct ResamplePlan {
    GridShape source;
    int target_nx = 256, target_ny = 256, target_nz = 128;
    Interpolation interp = Interpolation::Nearest;

    void validate() const {
        if (source.voxel_count() == 0)
            throw InvalidArgumentError("resample plan: source shape unset");
        if (target_nx < 1 || target_ny < 1 || target_nz < 1)
            throw InvalidArgumentError("resample plan: target dims must be >= 1");
    }

    GridShape target_shape() const {
        validate();
        return GridShape(target_nx, target_ny, target_nz,
                         source.sx * source.nx / target_nx,
                         source.sy * source.ny / target_ny,
                         source.sz * source.nz / target_nz);
    }
};

namespace detail {

// Corner-aligned continuous mapping with half-voxel offsets: target
// index i lands on source coordinate (i + 0.5) * n_src / n_tgt - 0.5.
// Plain index scaling drifts by half a voxel at 2x ratios; this does not.
inline double map_coord(int i, int n_src, int n_tgt) {
    return (static_cast<double>(i) + 0.5) * n_src / n_tgt - 0.5;
}

inline int nearest_index(double c, int n) {
    // round half up
    const int idx = static_cast<int>(std::floor(c + 0.5));
    return std::clamp(idx, 0, n - 1);
}

template <class Volume>
Volume resample_nearest(const Volume& in, const ResamplePlan& plan) {
    const GridShape tgt = plan.target_shape();
    Volume out(tgt);
    const GridShape& src = in.shape;
    std::vector<int> mx(tgt.nx), my(tgt.ny), mz(tgt.nz);
    for (int x = 0; x < tgt.nx; ++x)
        mx[x] = nearest_index(map_coord(x, src.nx, tgt.nx), src.nx);
    for (int y = 0; y < tgt.ny; ++y)
        my[y] = nearest_index(map_coord(y, src.ny, tgt.ny), src.ny);
    for (int z = 0; z < tgt.nz; ++z)
        mz[z] = nearest_index(map_coord(z, src.nz, tgt.nz), src.nz);
    for (int z = 0; z < tgt.nz; ++z)
        for (int y = 0; y < tgt.ny; ++y)
            for (int x = 0; x < tgt.nx; ++x)
                out.data[tgt.index(x, y, z)] =
                    in.data[src.index(mx[x], my[y], mz[z])];
    return out;
}

} // namespace detail

inline BinaryVolume resample(const BinaryVolume& mask,
                             const ResamplePlan& plan) {
    plan.validate();
    if (!plan.source.same_counts(mask.shape))
        throw InvalidArgumentError("resample: plan source "
                                   + plan.source.describe() +
                                   " does not match volume " +
                                   mask.shape.describe());
    if (plan.interp != Interpolation::Nearest)
        throw InvalidArgumentError(
            "resample: trilinear interpolation is not valid for mask volumes");
    return detail::resample_nearest(mask, plan);
}

inline AtlasVolume resample(const AtlasVolume& atlas,
                            const ResamplePlan& plan) {
    plan.validate();
    if (!plan.source.same_counts(atlas.shape))
        throw InvalidArgumentError("resample: plan source does not match volume");
    if (plan.interp != Interpolation::Nearest)
        throw InvalidArgumentError(
            "resample: trilinear interpolation is not valid for label volumes");
    return detail::resample_nearest(atlas, plan);
}

inline WeightedVolume resample(const WeightedVolume& image,
                               const ResamplePlan& plan) {
    plan.validate();
    if (!plan.source.same_counts(image.shape))
        throw InvalidArgumentError("resample: plan source does not match volume");
    if (plan.interp == Interpolation::Nearest)
        return detail::resample_nearest(image, plan);

    const GridShape tgt = plan.target_shape();
    const GridShape& src = image.shape;
    WeightedVolume out(tgt);
    for (int z = 0; z < tgt.nz; ++z) {
        const double cz = detail::map_coord(z, src.nz, tgt.nz);
        const int z0 = static_cast<int>(std::floor(cz));
        const double fz = cz - z0;
        const int za = std::clamp(z0, 0, src.nz - 1);
        const int zb = std::clamp(z0 + 1, 0, src.nz - 1);
        for (int y = 0; y < tgt.ny; ++y) {
            const double cy = detail::map_coord(y, src.ny, tgt.ny);
            const int y0 = static_cast<int>(std::floor(cy));
            const double fy = cy - y0;
            const int ya = std::clamp(y0, 0, src.ny - 1);
            const int yb = std::clamp(y0 + 1, 0, src.ny - 1);
            for (int x = 0; x < tgt.nx; ++x) {
                const double cx = detail::map_coord(x, src.nx, tgt.nx);
                const int x0 = static_cast<int>(std::floor(cx));
                const double fx = cx - x0;
                const int xa = std::clamp(x0, 0, src.nx - 1);
                const int xb = std::clamp(x0 + 1, 0, src.nx - 1);
                const double v =
                    (1 - fz) *
                        ((1 - fy) * ((1 - fx) * image.at(xa, ya, za) +
                                     fx * image.at(xb, ya, za)) +
                         fy * ((1 - fx) * image.at(xa, yb, za) +
                               fx * image.at(xb, yb, za))) +
                    fz * ((1 - fy) * ((1 - fx) * image.at(xa, ya, zb) +
                                      fx * image.at(xb, ya, zb)) +
                          fy * ((1 - fx) * image.at(xa, yb, zb) +
                                fx * image.at(xb, yb, zb)));
                out.data[tgt.index(x, y, z)] = static_cast<float>(v);
            }
        }
    }
    return out;
}

/// Min-max normalization to [0,1]; a constant image maps to all-zeros.
inline WeightedVolume normalize_intensity(const WeightedVolume& image) {
    WeightedVolume out(image.shape);
    if (image.data.empty())
        return out;
    float lo = image.data.front(), hi = image.data.front();
    for (float v : image.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo)
        return out; // constant image
    const double range = static_cast<double>(hi) - static_cast<double>(lo);
    for (std::size_t i = 0; i < image.data.size(); ++i)
        out.data[i] = static_cast<float>(
            (static_cast<double>(image.data[i]) - lo) / range);
    return out;
}

/// 1 iff value > threshold (strict).
inline BinaryVolume binarize(const WeightedVolume& mask,
                             double threshold = 0.5) {
    BinaryVolume out(mask.shape);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        out.data[i] = mask.data[i] > threshold;
    return out;
}

/// The nz axial planes of a volume, each returned as an nx x ny x 1
/// volume so slices keep shape and spacing metadata.
template <class Volume>
std::vector<Volume> axial_slices(const Volume& v) {
    const GridShape& s = v.shape;
    const GridShape plane_shape(s.nx, s.ny, 1, s.sx, s.sy, s.sz);
    std::vector<Volume> planes;
    planes.reserve(s.nz);
    const std::size_t plane_size = plane_shape.voxel_count();
    for (int z = 0; z < s.nz; ++z) {
        Volume plane(plane_shape);
        std::copy_n(v.data.begin() + static_cast<std::ptrdiff_t>(z) *
                                         static_cast<std::ptrdiff_t>(plane_size),
                    plane_size, plane.data.begin());
        planes.push_back(std::move(plane));
    }
    return planes;
}

/// Inverse of axial_slices: stacks nx x ny x 1 planes back into a volume.
template <class Volume>
Volume restack_axial(const std::vector<Volume>& planes) {
    if (planes.empty())
        throw InvalidArgumentError("restack_axial: no planes");
    const GridShape& p = planes.front().shape;
    if (p.nz != 1)
        throw InvalidArgumentError("restack_axial: planes must have nz = 1");
    for (const auto& plane : planes)
        if (!plane.shape.same_counts(p))
            throw ShapeMismatchError("restack_axial: plane shapes differ");
    Volume out(GridShape(p.nx, p.ny, static_cast<int>(planes.size()), p.sx,
                         p.sy, p.sz));
    const std::size_t plane_size = p.voxel_count();
    for (std::size_t z = 0; z < planes.size(); ++z)
        std::copy_n(planes[z].data.begin(), plane_size,
                    out.data.begin() +
                        static_cast<std::ptrdiff_t>(z * plane_size));
    return out;
}

} // namespace voxfuse

#endif
