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

#ifndef VOXFUSE_VOLUME_HPP
#define VOXFUSE_VOLUME_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "voxfuse/errors.hpp"

namespace voxfuse {

// Dense 3D grids in x-fastest linear order (x varies quickest, then y,
// then z), matching the NIfTI-1 on-disk layout. All volume types are
// treated as immutable once filled; every operation below is a pure
// function over const inputs, so volumes can be shared across threads
// freely.

/// Voxel counts per axis plus physical voxel spacing in millimeters.
struct GridShape {
    int nx = 0, ny = 0, nz = 0;
    double sx = 1.0, sy = 1.0, sz = 1.0;

    GridShape() = default;

    GridShape(int nx_, int ny_, int nz_,
              double sx_ = 1.0, double sy_ = 1.0, double sz_ = 1.0)
        : nx(nx_), ny(ny_), nz(nz_), sx(sx_), sy(sy_), sz(sz_) {
        if (nx < 1 || ny < 1 || nz < 1)
            throw InvalidArgumentError("grid dimensions must be >= 1, got " +
                                       describe());
        if (!(sx > 0.0) || !(sy > 0.0) || !(sz > 0.0))
            throw InvalidArgumentError("voxel spacing must be > 0, got " +
                                       describe());
    }

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }

    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(nx) *
                   (static_cast<std::size_t>(y) +
                    static_cast<std::size_t>(ny) * static_cast<std::size_t>(z));
    }

    double voxel_volume_mm3() const { return sx * sy * sz; }

    bool same_counts(const GridShape& o) const {
        return nx == o.nx && ny == o.ny && nz == o.nz;
    }

    bool same_spacing(const GridShape& o, double tol = 1e-6) const {
        return std::abs(sx - o.sx) <= tol && std::abs(sy - o.sy) <= tol &&
               std::abs(sz - o.sz) <= tol;
    }

    std::string describe() const {
        std::ostringstream os;
        os << nx << "x" << ny << "x" << nz << " @ " << sx << "x" << sy << "x"
           << sz << " mm";
        return os.str();
    }

    friend bool operator==(const GridShape& a, const GridShape& b) {
        return a.same_counts(b) && a.sx == b.sx && a.sy == b.sy && a.sz == b.sz;
    }
};

/// Throws ShapeMismatchError naming both shapes when voxel counts differ.
/// Spacing differences are deliberately not an error here; callers that
/// care (the evaluation pipeline) flag them as warnings and use the
/// prediction's spacing for volume computations.
inline void require_same_counts(const GridShape& a, const GridShape& b,
                                const char* what) {
    if (!a.same_counts(b))
        throw ShapeMismatchError(std::string(what) + ": shape mismatch, " +
                                 a.describe() + " vs " + b.describe());
}

/// 3D mask of {0,1} voxels.
struct BinaryVolume {
    GridShape shape;
    std::vector<std::uint8_t> data;

    BinaryVolume() = default;

    explicit BinaryVolume(const GridShape& s)
        : shape(s), data(s.voxel_count(), 0) {}

    BinaryVolume(const GridShape& s, std::vector<std::uint8_t> d)
        : shape(s), data(std::move(d)) {
        if (data.size() != shape.voxel_count())
            throw InvalidArgumentError(
                "binary volume data length does not match shape " +
                shape.describe());
        for (std::uint8_t v : data)
            if (v > 1)
                throw InvalidArgumentError(
                    "binary volume values must be 0 or 1");
    }

    std::uint8_t at(int x, int y, int z) const {
        return data[shape.index(x, y, z)];
    }
    std::uint8_t& at(int x, int y, int z) { return data[shape.index(x, y, z)]; }

    /// Number of 1-voxels.
    std::uint64_t count_set() const {
        std::uint64_t n = 0;
        for (std::uint8_t v : data)
            n += v;
        return n;
    }
};

/// 3D grid of finite non-negative weights (tract probability maps,
/// intensity images).
struct WeightedVolume {
    GridShape shape;
    std::vector<float> data;

    WeightedVolume() = default;

    explicit WeightedVolume(const GridShape& s)
        : shape(s), data(s.voxel_count(), 0.0f) {}

    WeightedVolume(const GridShape& s, std::vector<float> d)
        : shape(s), data(std::move(d)) {
        if (data.size() != shape.voxel_count())
            throw InvalidArgumentError(
                "weighted volume data length does not match shape " +
                shape.describe());
        for (float v : data)
            if (!(v >= 0.0f) || !std::isfinite(v))
                throw InvalidArgumentError(
                    "weighted volume values must be finite and >= 0");
    }

    float at(int x, int y, int z) const { return data[shape.index(x, y, z)]; }
    float& at(int x, int y, int z) { return data[shape.index(x, y, z)]; }
};

/// 3D grid of super-region labels. 0 is background; 1..4 are the four
/// super-regions.
struct AtlasVolume {
    static constexpr int k_max_label = 4;

    GridShape shape;
    std::vector<std::uint8_t> data;

    AtlasVolume() = default;

    explicit AtlasVolume(const GridShape& s)
        : shape(s), data(s.voxel_count(), 0) {}

    AtlasVolume(const GridShape& s, std::vector<std::uint8_t> d)
        : shape(s), data(std::move(d)) {
        if (data.size() != shape.voxel_count())
            throw InvalidArgumentError(
                "atlas volume data length does not match shape " +
                shape.describe());
        for (std::uint8_t v : data)
            if (v > k_max_label)
                throw InvalidArgumentError(
                    "atlas labels must lie in {0..4}, found " +
                    std::to_string(int(v)));
    }

    std::uint8_t at(int x, int y, int z) const {
        return data[shape.index(x, y, z)];
    }
    std::uint8_t& at(int x, int y, int z) { return data[shape.index(x, y, z)]; }
};

/// Voxelwise confusion counts between a prediction and a reference mask.
struct VoxelCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
};

/// Exact confusion counts. Requires equal voxel counts; spacing may
/// differ (see require_same_counts).
inline VoxelCounts count_pair(const BinaryVolume& pred,
                              const BinaryVolume& truth) {
    require_same_counts(pred.shape, truth.shape, "count_pair");
    VoxelCounts c;
    const std::size_t n = pred.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned p = pred.data[i];
        const unsigned t = truth.data[i];
        c.tp += p & t;
        c.fp += p & (1u - t);
        c.fn += (1u - p) & t;
        c.tn += (1u - p) & (1u - t);
    }
    return c;
}

enum class CombineMode { Intersection, Union };

/// Voxelwise AND (Intersection) or OR (Union) over all members.
inline BinaryVolume logical_combine(std::span<const BinaryVolume* const> masks,
                                    CombineMode mode) {
    if (masks.empty())
        throw InvalidArgumentError("logical_combine: empty mask list");
    const GridShape& shape = masks.front()->shape;
    for (const BinaryVolume* m : masks)
        require_same_counts(shape, m->shape, "logical_combine");
    BinaryVolume out(shape);
    out.data = masks.front()->data;
    const std::size_t n = out.data.size();
    for (std::size_t k = 1; k < masks.size(); ++k) {
        const auto& d = masks[k]->data;
        if (mode == CombineMode::Intersection) {
            for (std::size_t i = 0; i < n; ++i)
                out.data[i] &= d[i];
        } else {
            for (std::size_t i = 0; i < n; ++i)
                out.data[i] |= d[i];
        }
    }
    return out;
}

inline BinaryVolume logical_combine(std::span<const BinaryVolume> masks,
                                    CombineMode mode) {
    std::vector<const BinaryVolume*> ptrs;
    ptrs.reserve(masks.size());
    for (const auto& m : masks)
        ptrs.push_back(&m);
    return logical_combine(std::span<const BinaryVolume* const>(ptrs), mode);
}

/// Keeps a mask voxel iff its atlas label is in `labels`. Labels must be
/// a non-empty subset of {1..4}; background (0) can never be selected.
inline BinaryVolume mask_restrict(const BinaryVolume& mask,
                                  const AtlasVolume& atlas,
                                  std::span<const int> labels) {
    require_same_counts(mask.shape, atlas.shape, "mask_restrict");
    if (labels.empty())
        throw InvalidArgumentError("mask_restrict: empty label set");
    bool keep[AtlasVolume::k_max_label + 1] = {};
    for (int l : labels) {
        if (l < 1 || l > AtlasVolume::k_max_label)
            throw InvalidArgumentError("mask_restrict: label " +
                                       std::to_string(l) +
                                       " outside {1..4}");
        keep[l] = true;
    }
    BinaryVolume out(mask.shape);
    const std::size_t n = mask.data.size();
    for (std::size_t i = 0; i < n; ++i)
        out.data[i] = mask.data[i] & static_cast<std::uint8_t>(keep[atlas.data[i]]);
    return out;
}

inline BinaryVolume mask_restrict(const BinaryVolume& mask,
                                  const AtlasVolume& atlas,
                                  std::initializer_list<int> labels) {
    return mask_restrict(mask, atlas, std::span<const int>(labels.begin(),
                                                           labels.size()));
}

/// Axis-aligned box with inclusive corners.
struct VoxelBox {
    int x0 = 0, y0 = 0, z0 = 0;
    int x1 = 0, y1 = 0, z1 = 0;

    bool within(int nx, int ny, int nz) const {
        return x0 >= 0 && y0 >= 0 && z0 >= 0 && x0 <= x1 && y0 <= y1 &&
               z0 <= z1 && x1 < nx && y1 < ny && z1 < nz;
    }

    std::int64_t voxels() const {
        return static_cast<std::int64_t>(x1 - x0 + 1) * (y1 - y0 + 1) *
               (z1 - z0 + 1);
    }
};

/// 3D prefix-sum grid over a binary mask: cumulative_at(i,j,k) is the
/// number of 1-voxels in [0..i]x[0..j]x[0..k], and any box count is
/// recovered with 8-term inclusion-exclusion. Counts are 64-bit; a full
/// 256x256x128 grid exceeds 2^23 voxels and cumulative sums need the
/// headroom.
class SummedAreaTable {
public:
    SummedAreaTable() = default;

    explicit SummedAreaTable(const BinaryVolume& mask)
        : SummedAreaTable(mask.shape.nx, mask.shape.ny, mask.shape.nz,
                          mask.data) {}

    /// Builds the table from a raw indicator grid in x-fastest order.
    /// Any nonzero cell counts as one.
    SummedAreaTable(int nx, int ny, int nz,
                    std::span<const std::uint8_t> values)
        : nx_(nx), ny_(ny), nz_(nz) {
        if (nx < 1 || ny < 1 || nz < 1)
            throw InvalidArgumentError("summed area table: dims must be >= 1");
        if (values.size() != static_cast<std::size_t>(nx) * ny * nz)
            throw InvalidArgumentError(
                "summed area table: data length does not match dims");
        // One zero-padded layer at the low end of each axis removes all
        // bounds branches from box queries. The build runs as a single
        // sweep over z-planes: an x-running sum feeds a scratch plane
        // holding the current plane's 2D prefix (it stays cache-resident),
        // and each cell adds the finished cell one plane below. The big
        // table is touched once for reading and once for writing.
        const std::size_t px = static_cast<std::size_t>(nx) + 1;
        const std::size_t py = static_cast<std::size_t>(ny) + 1;
        const std::size_t pz = static_cast<std::size_t>(nz) + 1;
        const std::size_t plane = px * py;
        p_ = std::make_unique_for_overwrite<std::int64_t[]>(plane * pz);
        std::fill_n(p_.get(), plane, 0); // z = 0 padding plane
        std::vector<std::int64_t> scratch(plane, 0);
        // row prefix in 32 bits (a row count never exceeds nx), so the
        // serial cumsum chain stays tiny and the combining loop below is
        // a branch-free vectorizable pass
        std::vector<std::int32_t> xsum(px);
        xsum[0] = 0;
        for (int z = 1; z <= nz; ++z) {
            std::int64_t* cur = p_.get() + static_cast<std::size_t>(z) * plane;
            const std::int64_t* prev = cur - plane;
            std::fill_n(cur, px, 0); // y = 0 padding row
            for (int y = 1; y <= ny; ++y) {
                const std::uint8_t* src =
                    values.data() +
                    static_cast<std::size_t>(nx) *
                        (static_cast<std::size_t>(y - 1) +
                         static_cast<std::size_t>(ny) *
                             static_cast<std::size_t>(z - 1));
                std::int64_t* srow = scratch.data() +
                                     static_cast<std::size_t>(y) * px;
                const std::int64_t* srow_above = srow - px;
                std::int64_t* out = cur + static_cast<std::size_t>(y) * px;
                const std::int64_t* below = prev +
                                            static_cast<std::size_t>(y) * px;
                std::int32_t run = 0;
                for (int x = 1; x <= nx; ++x) {
                    run += src[x - 1] ? 1 : 0;
                    xsum[x] = run;
                }
                out[0] = 0; // x = 0 padding column
                for (int x = 1; x <= nx; ++x) {
                    const std::int64_t plane_prefix = xsum[x] + srow_above[x];
                    srow[x] = plane_prefix;
                    out[x] = plane_prefix + below[x];
                }
            }
        }
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }

    /// Count of 1-voxels in [0..x]x[0..y]x[0..z] inclusive.
    std::int64_t cumulative_at(int x, int y, int z) const {
        return p_[pidx(x + 1, y + 1, z + 1)];
    }

    std::int64_t total() const { return cumulative_at(nx_ - 1, ny_ - 1, nz_ - 1); }

    std::int64_t box_count(const VoxelBox& b) const {
        if (!b.within(nx_, ny_, nz_))
            throw InvalidArgumentError("summed area table: box out of bounds");
        return box_count_unchecked(b.x0, b.y0, b.z0, b.x1, b.y1, b.z1);
    }

    /// Hot-path query with inclusive corners; bounds are the caller's
    /// responsibility.
    std::int64_t box_count_unchecked(int x0, int y0, int z0, int x1, int y1,
                                     int z1) const {
        return p_[pidx(x1 + 1, y1 + 1, z1 + 1)] - p_[pidx(x0, y1 + 1, z1 + 1)] -
               p_[pidx(x1 + 1, y0, z1 + 1)] - p_[pidx(x1 + 1, y1 + 1, z0)] +
               p_[pidx(x0, y0, z1 + 1)] + p_[pidx(x0, y1 + 1, z0)] +
               p_[pidx(x1 + 1, y0, z0)] - p_[pidx(x0, y0, z0)];
    }

private:
    std::size_t pidx(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               (static_cast<std::size_t>(nx_) + 1) *
                   (static_cast<std::size_t>(y) +
                    (static_cast<std::size_t>(ny_) + 1) *
                        static_cast<std::size_t>(z));
    }

    int nx_ = 0, ny_ = 0, nz_ = 0;
    std::unique_ptr<std::int64_t[]> p_;
};

inline SummedAreaTable summed_area_table(const BinaryVolume& mask) {
    return SummedAreaTable(mask);
}

/// Mask reinterpreted as weights 0.0/1.0.
inline WeightedVolume to_weighted(const BinaryVolume& mask) {
    WeightedVolume out(mask.shape);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        out.data[i] = static_cast<float>(mask.data[i]);
    return out;
}

} // namespace voxfuse

#endif
