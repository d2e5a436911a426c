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

// Brute-force reference implementations used as independent oracles.
// Everything here is a plain triple loop over voxels or boxes; nothing
// shares code with the library's prefix-sum or windowed fast paths.

#ifndef VOXFUSE_TESTS_ORACLES_HPP
#define VOXFUSE_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "voxfuse/rng.hpp"
#include "voxfuse/volume.hpp"

namespace oracle {

using voxfuse::AtlasVolume;
using voxfuse::BinaryVolume;
using voxfuse::GridShape;
using voxfuse::Rng;
using voxfuse::VoxelBox;
using voxfuse::VoxelCounts;
using voxfuse::WeightedVolume;

// ---- random fixture generators -------------------------------------

inline GridShape random_shape(Rng& rng, int lo, int hi,
                              bool random_spacing = true) {
    auto dim = [&] { return static_cast<int>(rng.uniform_int(lo, hi)); };
    if (!random_spacing)
        return GridShape(dim(), dim(), dim());
    auto sp = [&] { return rng.uniform(0.5, 3.0); };
    return GridShape(dim(), dim(), dim(), sp(), sp(), sp());
}

inline BinaryVolume random_mask(Rng& rng, const GridShape& s,
                                double density = 0.3) {
    BinaryVolume m(s);
    for (auto& v : m.data)
        v = rng.bernoulli(density) ? 1 : 0;
    return m;
}

inline WeightedVolume random_weights(Rng& rng, const GridShape& s,
                                     double max_value = 1.0) {
    WeightedVolume w(s);
    for (auto& v : w.data)
        v = static_cast<float>(rng.uniform() * max_value);
    return w;
}

inline AtlasVolume random_atlas(Rng& rng, const GridShape& s) {
    AtlasVolume a(s);
    for (auto& v : a.data)
        v = static_cast<std::uint8_t>(rng.below(5));
    return a;
}

inline VoxelBox random_box(Rng& rng, const GridShape& s) {
    auto range = [&](int n, int& lo, int& hi) {
        lo = static_cast<int>(rng.uniform_int(0, n - 1));
        hi = static_cast<int>(rng.uniform_int(lo, n - 1));
    };
    VoxelBox b;
    range(s.nx, b.x0, b.x1);
    range(s.ny, b.y0, b.y1);
    range(s.nz, b.z0, b.z1);
    return b;
}

// ---- voxel-loop oracles ---------------------------------------------

inline VoxelCounts count_pair(const BinaryVolume& pred,
                              const BinaryVolume& truth) {
    VoxelCounts c;
    for (int z = 0; z < pred.shape.nz; ++z)
        for (int y = 0; y < pred.shape.ny; ++y)
            for (int x = 0; x < pred.shape.nx; ++x) {
                const bool p = pred.at(x, y, z);
                const bool t = truth.at(x, y, z);
                if (p && t)
                    ++c.tp;
                else if (p)
                    ++c.fp;
                else if (t)
                    ++c.fn;
                else
                    ++c.tn;
            }
    return c;
}

inline BinaryVolume combine(const std::vector<BinaryVolume>& masks,
                            bool intersection) {
    BinaryVolume out(masks.front().shape);
    for (int z = 0; z < out.shape.nz; ++z)
        for (int y = 0; y < out.shape.ny; ++y)
            for (int x = 0; x < out.shape.nx; ++x) {
                bool acc = masks.front().at(x, y, z);
                for (std::size_t k = 1; k < masks.size(); ++k) {
                    const bool v = masks[k].at(x, y, z);
                    acc = intersection ? (acc && v) : (acc || v);
                }
                out.at(x, y, z) = acc;
            }
    return out;
}

inline BinaryVolume mask_restrict(const BinaryVolume& mask,
                                  const AtlasVolume& atlas,
                                  const std::vector<int>& labels) {
    BinaryVolume out(mask.shape);
    for (int z = 0; z < mask.shape.nz; ++z)
        for (int y = 0; y < mask.shape.ny; ++y)
            for (int x = 0; x < mask.shape.nx; ++x) {
                if (!mask.at(x, y, z))
                    continue;
                const int label = atlas.at(x, y, z);
                if (std::find(labels.begin(), labels.end(), label) !=
                    labels.end())
                    out.at(x, y, z) = 1;
            }
    return out;
}

inline std::int64_t box_count(const BinaryVolume& mask, const VoxelBox& b) {
    std::int64_t n = 0;
    for (int z = b.z0; z <= b.z1; ++z)
        for (int y = b.y0; y <= b.y1; ++y)
            for (int x = b.x0; x <= b.x1; ++x)
                n += mask.at(x, y, z);
    return n;
}

inline std::array<std::int64_t, 5> region_counts(const BinaryVolume& lesion,
                                                 const AtlasVolume& atlas) {
    std::array<std::int64_t, 5> counts{};
    for (int z = 0; z < lesion.shape.nz; ++z)
        for (int y = 0; y < lesion.shape.ny; ++y)
            for (int x = 0; x < lesion.shape.nx; ++x)
                if (lesion.at(x, y, z))
                    ++counts[atlas.at(x, y, z)];
    return counts;
}

inline BinaryVolume compose_regionwise(
    const std::vector<std::pair<std::vector<int>, BinaryVolume>>& entries,
    const AtlasVolume& atlas) {
    BinaryVolume out(atlas.shape);
    for (const auto& [labels, pred] : entries) {
        const BinaryVolume gated = mask_restrict(pred, atlas, labels);
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] |= gated.data[i];
    }
    return out;
}

inline double weighted_overlap(const BinaryVolume& lesion,
                               const WeightedVolume& tract) {
    double s = 0.0;
    for (int z = 0; z < lesion.shape.nz; ++z)
        for (int y = 0; y < lesion.shape.ny; ++y)
            for (int x = 0; x < lesion.shape.nx; ++x)
                if (lesion.at(x, y, z))
                    s += tract.at(x, y, z);
    return s;
}

inline double total_weight(const WeightedVolume& tract) {
    double s = 0.0;
    for (float v : tract.data)
        s += v;
    return s;
}

// ---- sliding-window fusion oracle, O(N * w^3) per volume ------------

inline BinaryVolume agreement_window(const std::vector<BinaryVolume>& masks,
                                     int w, double tau, int stride) {
    const GridShape& s = masks.front().shape;
    BinaryVolume any(s);
    for (int z = 0; z < s.nz; ++z)
        for (int y = 0; y < s.ny; ++y)
            for (int x = 0; x < s.nx; ++x) {
                bool u = false;
                for (const auto& m : masks)
                    u = u || m.at(x, y, z);
                any.at(x, y, z) = u;
            }

    std::vector<std::uint8_t> covered(s.voxel_count(), 0);
    for (int z0 = 0; z0 < s.nz; z0 += stride) {
        const int z1 = std::min(z0 + w - 1, s.nz - 1);
        for (int y0 = 0; y0 < s.ny; y0 += stride) {
            const int y1 = std::min(y0 + w - 1, s.ny - 1);
            for (int x0 = 0; x0 < s.nx; x0 += stride) {
                const int x1 = std::min(x0 + w - 1, s.nx - 1);
                std::int64_t agree = 0, any_cnt = 0;
                for (int z = z0; z <= z1; ++z)
                    for (int y = y0; y <= y1; ++y)
                        for (int x = x0; x <= x1; ++x) {
                            bool all = true, some = false;
                            for (const auto& m : masks) {
                                const bool v = m.at(x, y, z);
                                all = all && v;
                                some = some || v;
                            }
                            agree += all;
                            any_cnt += some;
                        }
                if (any_cnt == 0)
                    continue;
                if (static_cast<double>(agree) >=
                    tau * static_cast<double>(any_cnt))
                    for (int z = z0; z <= z1; ++z)
                        for (int y = y0; y <= y1; ++y)
                            for (int x = x0; x <= x1; ++x)
                                covered[s.index(x, y, z)] = 1;
            }
        }
    }
    BinaryVolume out(s);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = any.data[i] & covered[i];
    return out;
}

// ---- independent resampling oracle ----------------------------------

inline int nearest_source_index(int i, int n_src, int n_tgt) {
    const double c =
        (static_cast<double>(i) + 0.5) * n_src / n_tgt - 0.5;
    return std::clamp(static_cast<int>(std::floor(c + 0.5)), 0, n_src - 1);
}

inline BinaryVolume resample_nearest(const BinaryVolume& in, int tx, int ty,
                                     int tz) {
    const GridShape& s = in.shape;
    BinaryVolume out(GridShape(tx, ty, tz, s.sx * s.nx / tx, s.sy * s.ny / ty,
                               s.sz * s.nz / tz));
    for (int z = 0; z < tz; ++z)
        for (int y = 0; y < ty; ++y)
            for (int x = 0; x < tx; ++x)
                out.at(x, y, z) = in.at(nearest_source_index(x, s.nx, tx),
                                        nearest_source_index(y, s.ny, ty),
                                        nearest_source_index(z, s.nz, tz));
    return out;
}

// ---- helpers ---------------------------------------------------------

inline bool subset_of(const BinaryVolume& a, const BinaryVolume& b) {
    for (std::size_t i = 0; i < a.data.size(); ++i)
        if (a.data[i] && !b.data[i])
            return false;
    return true;
}

inline bool equal_mask(const BinaryVolume& a, const BinaryVolume& b) {
    return a.shape.same_counts(b.shape) && a.data == b.data;
}

} // namespace oracle

#endif
