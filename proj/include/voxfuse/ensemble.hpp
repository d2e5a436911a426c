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

#ifndef VOXFUSE_ENSEMBLE_HPP
#define VOXFUSE_ENSEMBLE_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voxfuse/parallel.hpp"
#include "voxfuse/volume.hpp"

namespace voxfuse {

// Ensemble engine for binary lesion masks.
//
// Stacking keeps only the voxels every member predicts. The agreement
// window slides a w x w x w box over the members and, wherever the
// members' within-box overlap ratio I/U (all-agree count over any-agree
// count) reaches the threshold, retains the union of member predictions
// inside the box; boxes below the threshold contribute nothing. Box
// origins step by `stride` along each axis starting at 0, and boxes are
// clipped at the volume boundary rather than dropped, so lesions touching
// an edge stay detectable. The output is always a subset of the member
// union.
//
// The windowed I/U ratio makes small-member stacks meaningful: with two
// members a per-voxel vote fraction only takes values {0, 1/2, 1}, so a
// 0.75 threshold could never bite, while the windowed ratio varies
// smoothly with local disagreement. The threshold comparison is
// inclusive (ratio >= threshold), so 1.0 expresses exact agreement.

enum class FusionMethod { Stack, AgreementWindow };

/// Named ensemble configuration. `window`, `overlap_threshold` and
/// `stride` are ignored by the Stack method.
struct FusionSpec {
    FusionMethod method = FusionMethod::Stack;
    std::vector<std::string> members;
    int window = 1;
    double overlap_threshold = 1.0;
    int stride = 1;

    void validate() const {
        if (members.empty())
            throw InvalidArgumentError("fusion spec: member list is empty");
        if (method == FusionMethod::AgreementWindow) {
            if (window < 1)
                throw InvalidArgumentError("fusion spec: window must be >= 1");
            if (!(overlap_threshold > 0.0) || overlap_threshold > 1.0)
                throw InvalidArgumentError(
                    "fusion spec: overlap threshold must be in (0, 1]");
            if (stride < 1)
                throw InvalidArgumentError("fusion spec: stride must be >= 1");
        }
    }
};

struct AgreementWindowParams {
    int window = 3;
    double overlap_threshold = 0.5;
    int stride = 1;

    void validate() const {
        if (window < 1)
            throw InvalidArgumentError("agreement window: window must be >= 1");
        if (!(overlap_threshold > 0.0) || overlap_threshold > 1.0)
            throw InvalidArgumentError(
                "agreement window: overlap threshold must be in (0, 1]");
        if (stride < 1)
            throw InvalidArgumentError("agreement window: stride must be >= 1");
    }
};

namespace detail {

inline void validate_members(std::span<const BinaryVolume* const> masks,
                             const char* what) {
    if (masks.empty())
        throw InvalidArgumentError(std::string(what) + ": empty member list");
    for (const BinaryVolume* m : masks)
        require_same_counts(masks.front()->shape, m->shape, what);
}

/// All-agree and any-agree indicator grids over the members.
inline void build_vote_grids(std::span<const BinaryVolume* const> masks,
                             std::vector<std::uint8_t>& all_agree,
                             std::vector<std::uint8_t>& any_agree) {
    const std::size_t n = masks.front()->data.size();
    all_agree = masks.front()->data;
    any_agree = masks.front()->data;
    for (std::size_t k = 1; k < masks.size(); ++k) {
        const auto& d = masks[k]->data;
        for (std::size_t i = 0; i < n; ++i) {
            all_agree[i] &= d[i];
            any_agree[i] |= d[i];
        }
    }
}

inline BinaryVolume fuse_stack(std::span<const BinaryVolume* const> masks) {
    validate_members(masks, "fuse_stack");
    return logical_combine(masks, CombineMode::Intersection);
}

/// Bounding box of the union of members, in volume coordinates.
struct UnionBounds {
    int x0 = 0, y0 = 0, z0 = 0, x1 = -1, y1 = -1, z1 = -1;
    bool empty() const { return x1 < x0; }
};

inline UnionBounds union_bounds(std::span<const BinaryVolume* const> masks) {
    const GridShape& s = masks.front()->shape;
    UnionBounds b{s.nx, s.ny, s.nz, -1, -1, -1};
    for (const BinaryVolume* m : masks) {
        for (int z = 0; z < s.nz; ++z)
            for (int y = 0; y < s.ny; ++y) {
                const std::uint8_t* row = m->data.data() + s.index(0, y, z);
                int first = -1, last = -1;
                for (int x = 0; x < s.nx; ++x)
                    if (row[x]) {
                        if (first < 0)
                            first = x;
                        last = x;
                    }
                if (first < 0)
                    continue;
                b.x0 = std::min(b.x0, first);
                b.x1 = std::max(b.x1, last);
                b.y0 = std::min(b.y0, y);
                b.y1 = std::max(b.y1, y);
                b.z0 = std::min(b.z0, z);
                b.z1 = std::max(b.z1, z);
            }
    }
    return b;
}

/// A summed-area table over a sub-box of the volume, queried in volume
/// coordinates. Counts outside the crop are zero by construction, so
/// queries clamp instead of erroring.
class CroppedSat {
public:
    CroppedSat(int ox, int oy, int oz, int cx, int cy, int cz,
               std::span<const std::uint8_t> values)
        : ox_(ox), oy_(oy), oz_(oz), sat_(cx, cy, cz, values) {}

    std::int64_t count(int x0, int y0, int z0, int x1, int y1, int z1) const {
        x0 = std::max(x0 - ox_, 0);
        y0 = std::max(y0 - oy_, 0);
        z0 = std::max(z0 - oz_, 0);
        x1 = std::min(x1 - ox_, sat_.nx() - 1);
        y1 = std::min(y1 - oy_, sat_.ny() - 1);
        z1 = std::min(z1 - oz_, sat_.nz() - 1);
        if (x1 < x0 || y1 < y0 || z1 < z0)
            return 0;
        return sat_.box_count_unchecked(x0, y0, z0, x1, y1, z1);
    }

private:
    int ox_, oy_, oz_;
    SummedAreaTable sat_;
};

inline BinaryVolume
fuse_agreement_window(std::span<const BinaryVolume* const> masks,
                      const AgreementWindowParams& p) {
    validate_members(masks, "fuse_agreement_window");
    p.validate();
    const GridShape shape = masks.front()->shape;
    const int nx = shape.nx, ny = shape.ny, nz = shape.nz;
    const int w = p.window, stride = p.stride;
    const double tau = p.overlap_threshold;
    const std::size_t n = shape.voxel_count();
    const std::size_t k = masks.size();

    BinaryVolume out(shape);
    // Everything outside the member-union bounding box is inert: boxes
    // there have no union voxels and cannot pass, and the output is a
    // subset of the union. The tables and scans therefore cover only
    // the crop.
    const UnionBounds bb = union_bounds(masks);
    if (bb.empty())
        return out;
    const int cx = bb.x1 - bb.x0 + 1;
    const int cy = bb.y1 - bb.y0 + 1;
    const int cz = bb.z1 - bb.z0 + 1;
    const std::size_t crop_n = static_cast<std::size_t>(cx) * cy * cz;

    std::vector<std::uint8_t> all_c(crop_n), any_c(crop_n);
    for (int z = 0; z < cz; ++z)
        for (int y = 0; y < cy; ++y) {
            const std::size_t src0 = shape.index(bb.x0, bb.y0 + y, bb.z0 + z);
            std::uint8_t* arow = all_c.data() +
                                 (static_cast<std::size_t>(z) * cy + y) * cx;
            std::uint8_t* orow = any_c.data() +
                                 (static_cast<std::size_t>(z) * cy + y) * cx;
            const std::uint8_t* m0 = masks[0]->data.data() + src0;
            for (int x = 0; x < cx; ++x) {
                arow[x] = m0[x];
                orow[x] = m0[x];
            }
            for (std::size_t mk = 1; mk < k; ++mk) {
                const std::uint8_t* m = masks[mk]->data.data() + src0;
                for (int x = 0; x < cx; ++x) {
                    arow[x] &= m[x];
                    orow[x] |= m[x];
                }
            }
        }
    const CroppedSat sat_all(bb.x0, bb.y0, bb.z0, cx, cy, cz, all_c);
    const CroppedSat sat_any(bb.x0, bb.y0, bb.z0, cx, cy, cz, any_c);
    all_c.clear();
    all_c.shrink_to_fit();
    any_c.clear();
    any_c.shrink_to_fit();

    // Box origins live on the stride lattice {0, stride, ...} of the
    // full volume; only origins whose box can reach the union need
    // scanning. A row-level union query rules out empty rows wholesale.
    auto lattice_begin = [stride](int lo) {
        const int s = std::max(0, lo);
        return (s + stride - 1) / stride * stride;
    };
    const int zb0 = lattice_begin(bb.z0 - w + 1);
    const int yb0 = lattice_begin(bb.y0 - w + 1);
    const int xb0 = lattice_begin(bb.x0 - w + 1);
    const int zb1 = bb.z1, yb1 = bb.y1, xb1 = bb.x1;
    if (zb0 > zb1 || yb0 > yb1 || xb0 > xb1)
        return out;

    std::vector<std::vector<std::size_t>> passing_by_z(
        static_cast<std::size_t>(nz));
    const unsigned workers = detail::auto_workers(crop_n);
    const std::size_t z_span = static_cast<std::size_t>(zb1 - zb0 + 1);
    parallel_blocks(z_span, workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t zi = lo; zi < hi; ++zi) {
            const int z0 = zb0 + static_cast<int>(zi);
            if (z0 % stride != 0)
                continue;
            const int z1 = std::min(z0 + w - 1, nz - 1);
            auto& passing = passing_by_z[static_cast<std::size_t>(z0)];
            for (int y0 = yb0; y0 <= yb1; y0 += stride) {
                const int y1 = std::min(y0 + w - 1, ny - 1);
                if (sat_any.count(0, y0, z0, nx - 1, y1, z1) == 0)
                    continue;
                for (int x0 = xb0; x0 <= xb1; x0 += stride) {
                    const int x1 = std::min(x0 + w - 1, nx - 1);
                    const std::int64_t u =
                        sat_any.count(x0, y0, z0, x1, y1, z1);
                    if (u == 0)
                        continue;
                    const std::int64_t i_cnt =
                        sat_all.count(x0, y0, z0, x1, y1, z1);
                    if (static_cast<double>(i_cnt) >=
                        tau * static_cast<double>(u))
                        passing.push_back(shape.index(x0, y0, z0));
                }
            }
        }
    });

    std::size_t pass_count = 0;
    for (const auto& v : passing_by_z)
        pass_count += v.size();
    if (pass_count == 0)
        return out;

    auto union_at = [&masks, k](std::size_t i) {
        std::uint8_t u = masks[0]->data[i];
        for (std::size_t mk = 1; mk < k; ++mk)
            u |= masks[mk]->data[i];
        return u;
    };

    const std::int64_t mark_cost =
        static_cast<std::int64_t>(pass_count) * w * w * w;
    if (mark_cost <= 2 * static_cast<std::int64_t>(crop_n)) {
        // few passing boxes: paint the member union inside each directly
        for (int z0 = zb0; z0 <= zb1; ++z0) {
            for (const std::size_t origin :
                 passing_by_z[static_cast<std::size_t>(z0)]) {
                const int x0 = static_cast<int>(origin %
                                                static_cast<std::size_t>(nx));
                const int y0 = static_cast<int>(
                    (origin / static_cast<std::size_t>(nx)) %
                    static_cast<std::size_t>(ny));
                const int x1 = std::min(x0 + w - 1, nx - 1);
                const int y1 = std::min(y0 + w - 1, ny - 1);
                const int z1 = std::min(z0 + w - 1, nz - 1);
                for (int z = z0; z <= z1; ++z)
                    for (int y = y0; y <= y1; ++y) {
                        std::size_t i = shape.index(x0, y, z);
                        for (int x = x0; x <= x1; ++x, ++i)
                            out.data[i] |= union_at(i);
                    }
            }
        }
        return out;
    }

    // dense pass set: a table over the passing-origin indicator answers
    // "any passing origin in [v-w+1, v] per axis" with one more query
    std::vector<std::uint8_t> pass_grid(
        static_cast<std::size_t>(xb1 - xb0 + 1) * (yb1 - yb0 + 1) *
            (zb1 - zb0 + 1),
        0);
    const int pcx = xb1 - xb0 + 1, pcy = yb1 - yb0 + 1;
    for (const auto& per_z : passing_by_z)
        for (const std::size_t origin : per_z) {
            const int x0 =
                static_cast<int>(origin % static_cast<std::size_t>(nx));
            const int y0 = static_cast<int>(
                (origin / static_cast<std::size_t>(nx)) %
                static_cast<std::size_t>(ny));
            const int z0 = static_cast<int>(
                origin / (static_cast<std::size_t>(nx) * ny));
            pass_grid[(static_cast<std::size_t>(z0 - zb0) * pcy +
                       (y0 - yb0)) *
                          pcx +
                      (x0 - xb0)] = 1;
        }
    const CroppedSat sat_pass(xb0, yb0, zb0, pcx, pcy, zb1 - zb0 + 1,
                              pass_grid);
    parallel_blocks(static_cast<std::size_t>(cz), workers,
                    [&](std::size_t lo, std::size_t hi) {
        for (int zi = static_cast<int>(lo); zi < static_cast<int>(hi); ++zi) {
            const int z = bb.z0 + zi;
            for (int y = bb.y0; y <= bb.y1; ++y) {
                std::size_t i = shape.index(bb.x0, y, z);
                for (int x = bb.x0; x <= bb.x1; ++x, ++i) {
                    if (!union_at(i))
                        continue;
                    out.data[i] = sat_pass.count(x - w + 1, y - w + 1,
                                                 z - w + 1, x, y, z) > 0;
                }
            }
        }
    });
    return out;
}

} // namespace detail

/// Voxelwise intersection of all members ("overlapping voxels").
inline BinaryVolume fuse_stack(std::span<const BinaryVolume> masks) {
    std::vector<const BinaryVolume*> ptrs;
    ptrs.reserve(masks.size());
    for (const auto& m : masks)
        ptrs.push_back(&m);
    return detail::fuse_stack(ptrs);
}

/// Member agreement within one box: all-agree count, any-agree count and
/// their ratio. The ratio is empty when no member predicts inside the box.
struct WindowOverlap {
    std::int64_t intersection_count = 0;
    std::int64_t union_count = 0;
    std::optional<double> ratio;
};

inline WindowOverlap window_overlap(std::span<const BinaryVolume> masks,
                                    const VoxelBox& box) {
    std::vector<const BinaryVolume*> ptrs;
    ptrs.reserve(masks.size());
    for (const auto& m : masks)
        ptrs.push_back(&m);
    detail::validate_members(ptrs, "window_overlap");
    const GridShape& shape = ptrs.front()->shape;
    if (!box.within(shape.nx, shape.ny, shape.nz))
        throw InvalidArgumentError("window_overlap: box out of bounds for " +
                                   shape.describe());
    WindowOverlap r;
    for (int z = box.z0; z <= box.z1; ++z)
        for (int y = box.y0; y <= box.y1; ++y)
            for (int x = box.x0; x <= box.x1; ++x) {
                unsigned all = 1, any = 0;
                for (const BinaryVolume* m : ptrs) {
                    const unsigned v = m->at(x, y, z);
                    all &= v;
                    any |= v;
                }
                r.intersection_count += all;
                r.union_count += any;
            }
    if (r.union_count > 0)
        r.ratio = static_cast<double>(r.intersection_count) /
                  static_cast<double>(r.union_count);
    return r;
}

inline BinaryVolume
fuse_agreement_window(std::span<const BinaryVolume> masks,
                      const AgreementWindowParams& params) {
    std::vector<const BinaryVolume*> ptrs;
    ptrs.reserve(masks.size());
    for (const auto& m : masks)
        ptrs.push_back(&m);
    return detail::fuse_agreement_window(ptrs, params);
}

/// Routes a FusionSpec to the matching method, resolving member ids
/// against the given mask table.
inline BinaryVolume fuse_apply(const FusionSpec& spec,
                               const std::map<std::string, BinaryVolume>& masks) {
    spec.validate();
    std::vector<const BinaryVolume*> ptrs;
    ptrs.reserve(spec.members.size());
    for (const auto& id : spec.members) {
        auto it = masks.find(id);
        if (it == masks.end())
            throw InvalidArgumentError("fuse_apply: unknown member id '" + id +
                                       "'");
        ptrs.push_back(&it->second);
    }
    if (spec.method == FusionMethod::Stack)
        return detail::fuse_stack(ptrs);
    return detail::fuse_agreement_window(
        ptrs, AgreementWindowParams{spec.window, spec.overlap_threshold,
                                    spec.stride});
}

} // namespace voxfuse

#endif
