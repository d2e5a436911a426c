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

#ifndef VOXFUSE_SYNTHETIC_HPP
#define VOXFUSE_SYNTHETIC_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "voxfuse/regions.hpp"
#include "voxfuse/rng.hpp"
#include "voxfuse/volume.hpp"

namespace voxfuse {

// Deterministic synthetic fixtures: a phantom brain with a four-region
// atlas, a tapered tract column, ellipsoid ground-truth lesions, and
// degraded "model predictions" with controllable error modes. Everything
// is reproducible from (spec, seed) alone; no global state.
//
// Phantom layout. The brain is an ellipsoid filling most of the grid.
// Inside it the atlas labels four quadrant zones split at x = nx/2 and
// z = nz/2:
//
//   label 1: x < nx/2, z < nz/2       label 2: x >= nx/2, z < nz/2
//   label 3: x < nx/2, z >= nz/2      label 4: x >= nx/2, z >= nz/2
//
// The tract is a Gaussian-profile column running the full z extent at
// x = 0.28*nx, y = ny/2, tapering from a narrow base at z = 0 to a wide
// top at z = nz-1, with support cut at 3 sigma. The column therefore
// lies entirely inside the x < nx/2 half, i.e. regions {1,3}.

/// Error model for one synthetic prediction.
struct NoiseSpec {
    std::uint64_t seed = 0;
    double boundary_jitter = 0.0; ///< flip probability on the boundary shell
    int fp_blob_count = 0;        ///< spherical false-positive blobs
    int fp_blob_radius = 0;       ///< blob radius in voxels
    double dropout = 0.0;         ///< delete probability for interior voxels

    void validate() const {
        if (boundary_jitter < 0.0 || boundary_jitter > 1.0 || dropout < 0.0 ||
            dropout > 1.0)
            throw InvalidArgumentError(
                "noise spec: probabilities must lie in [0, 1]");
        if (fp_blob_count < 0 || fp_blob_radius < 0)
            throw InvalidArgumentError(
                "noise spec: blob count and radius must be >= 0");
    }
};

/// Geometry of one phantom subject.
struct PhantomSpec {
    GridShape shape{64, 64, 32, 2.0, 2.0, 2.0};
    std::array<double, 3> lesion_center{18.0, 32.0, 8.0};
    std::array<double, 3> lesion_radii{4.0, 4.0, 4.0};
    int target_region = 1;

    void validate() const {
        if (target_region < 1 || target_region > AtlasVolume::k_max_label)
            throw InvalidArgumentError("phantom spec: target region " +
                                       std::to_string(target_region) +
                                       " outside {1..4}");
        const int dims[3] = {shape.nx, shape.ny, shape.nz};
        for (int a = 0; a < 3; ++a) {
            if (!(lesion_radii[a] > 0.0))
                throw InvalidArgumentError(
                    "phantom spec: lesion radii must be > 0");
            if (lesion_center[a] - lesion_radii[a] < 0.0 ||
                lesion_center[a] + lesion_radii[a] > dims[a] - 1)
                throw InvalidArgumentError(
                    "phantom spec: lesion ellipsoid does not fit in the "
                    "volume");
        }
    }
};

namespace detail {

struct BrainGeometry {
    double cx, cy, cz; // ellipsoid center
    double ax, ay, az; // semi-axes

    bool inside(int x, int y, int z) const {
        const double dx = (x - cx) / ax;
        const double dy = (y - cy) / ay;
        const double dz = (z - cz) / az;
        return dx * dx + dy * dy + dz * dz <= 1.0;
    }
};

inline BrainGeometry brain_geometry(const GridShape& s) {
    return BrainGeometry{(s.nx - 1) / 2.0, (s.ny - 1) / 2.0, (s.nz - 1) / 2.0,
                         0.46 * s.nx, 0.46 * s.ny, 0.46 * s.nz};
}

} // namespace detail

/// Four quadrant-style region labels inside the phantom brain ellipsoid.
inline AtlasVolume phantom_atlas(const GridShape& shape) {
    AtlasVolume atlas(shape);
    const auto brain = detail::brain_geometry(shape);
    const int half_x = shape.nx / 2;
    const int half_z = shape.nz / 2;
    for (int z = 0; z < shape.nz; ++z)
        for (int y = 0; y < shape.ny; ++y)
            for (int x = 0; x < shape.nx; ++x) {
                if (!brain.inside(x, y, z))
                    continue;
                const int label = 1 + (x >= half_x ? 1 : 0) +
                                  (z >= half_z ? 2 : 0);
                atlas.at(x, y, z) = static_cast<std::uint8_t>(label);
            }
    return atlas;
}

/// Tapered Gaussian tract column with weights in [0, 1], confined to
/// regions {1,3} of the phantom atlas layout.
inline WeightedVolume phantom_tract(const GridShape& shape) {
    WeightedVolume tract(shape);
    const auto brain = detail::brain_geometry(shape);
    const double tx = 0.28 * shape.nx;
    const double ty = 0.5 * shape.ny;
    const double sigma_base = 0.025 * shape.nx;
    const double sigma_top = 0.055 * shape.nx;
    for (int z = 0; z < shape.nz; ++z) {
        const double t = shape.nz > 1
                             ? static_cast<double>(z) / (shape.nz - 1)
                             : 0.0;
        const double sigma = sigma_base + (sigma_top - sigma_base) * t;
        const double support = 3.0 * sigma;
        for (int y = 0; y < shape.ny; ++y)
            for (int x = 0; x < shape.nx; ++x) {
                if (!brain.inside(x, y, z))
                    continue;
                const double dx = x - tx;
                const double dy = y - ty;
                const double d2 = dx * dx + dy * dy;
                if (d2 > support * support)
                    continue;
                tract.at(x, y, z) = static_cast<float>(
                    std::exp(-d2 / (2.0 * sigma * sigma)));
            }
    }
    return tract;
}

/// Rasterized lesion ellipsoid clipped to its target region.
inline BinaryVolume phantom_lesion(const PhantomSpec& spec,
                                   const AtlasVolume& atlas) {
    spec.validate();
    require_same_counts(spec.shape, atlas.shape, "phantom_lesion");
    BinaryVolume lesion(spec.shape);
    const auto& c = spec.lesion_center;
    const auto& r = spec.lesion_radii;
    std::uint64_t kept = 0;
    for (int z = 0; z < spec.shape.nz; ++z)
        for (int y = 0; y < spec.shape.ny; ++y)
            for (int x = 0; x < spec.shape.nx; ++x) {
                const double dx = (x - c[0]) / r[0];
                const double dy = (y - c[1]) / r[1];
                const double dz = (z - c[2]) / r[2];
                if (dx * dx + dy * dy + dz * dz > 1.0)
                    continue;
                if (atlas.at(x, y, z) != spec.target_region)
                    continue;
                lesion.at(x, y, z) = 1;
                ++kept;
            }
    if (kept == 0)
        throw InvalidArgumentError(
            "phantom spec: lesion ellipsoid lies outside region " +
            std::to_string(spec.target_region));
    return lesion;
}

struct Phantom {
    AtlasVolume atlas;
    WeightedVolume tract;
    BinaryVolume lesion;
};

inline Phantom make_phantom(const PhantomSpec& spec) {
    spec.validate();
    Phantom p;
    p.atlas = phantom_atlas(spec.shape);
    p.tract = phantom_tract(spec.shape);
    p.lesion = phantom_lesion(spec, p.atlas);
    return p;
}

/// Applies the noise model to a ground-truth lesion: boundary-shell
/// flips, interior dropout, then false-positive blobs, in that order
/// and each driven by the single seeded stream, so the output is a pure
/// function of (lesion, noise, domain).
///
/// The boundary shell is classified on the *original* lesion via
/// 6-neighborhoods: inner-shell voxels (lesion voxels touching
/// background) may be deleted, outer-shell voxels (background touching
/// lesion) may be added, so with no blobs the output stays inside the
/// lesion's 1-voxel dilation. Blob centers are drawn uniformly over
/// `domain` (brain mask; whole grid when null) and re-drawn until the
/// blob does not intersect the true lesion.
inline BinaryVolume degrade(const BinaryVolume& lesion, const NoiseSpec& noise,
                            const BinaryVolume* domain = nullptr) {
    noise.validate();
    if (domain)
        require_same_counts(lesion.shape, domain->shape, "degrade");
    const GridShape& s = lesion.shape;
    Rng rng(noise.seed);
    BinaryVolume out = lesion;

    auto is_lesion = [&](int x, int y, int z) -> bool {
        if (x < 0 || y < 0 || z < 0 || x >= s.nx || y >= s.ny || z >= s.nz)
            return false;
        return lesion.at(x, y, z) != 0;
    };
    auto touches_opposite = [&](int x, int y, int z, bool self) -> bool {
        return is_lesion(x - 1, y, z) != self || is_lesion(x + 1, y, z) != self ||
               is_lesion(x, y - 1, z) != self || is_lesion(x, y + 1, z) != self ||
               is_lesion(x, y, z - 1) != self || is_lesion(x, y, z + 1) != self;
    };

    if (noise.boundary_jitter > 0.0) {
        for (int z = 0; z < s.nz; ++z)
            for (int y = 0; y < s.ny; ++y)
                for (int x = 0; x < s.nx; ++x) {
                    const bool inside = lesion.at(x, y, z) != 0;
                    if (!touches_opposite(x, y, z, inside))
                        continue; // not on the shell
                    if (rng.bernoulli(noise.boundary_jitter))
                        out.at(x, y, z) = inside ? 0 : 1;
                }
    }

    if (noise.dropout > 0.0) {
        for (int z = 0; z < s.nz; ++z)
            for (int y = 0; y < s.ny; ++y)
                for (int x = 0; x < s.nx; ++x) {
                    if (!lesion.at(x, y, z) || touches_opposite(x, y, z, true))
                        continue; // only interior voxels drop out
                    if (rng.bernoulli(noise.dropout))
                        out.at(x, y, z) = 0;
                }
    }

    if (noise.fp_blob_count > 0) {
        std::vector<std::size_t> sites;
        if (domain) {
            for (std::size_t i = 0; i < domain->data.size(); ++i)
                if (domain->data[i])
                    sites.push_back(i);
        } else {
            sites.resize(s.voxel_count());
            for (std::size_t i = 0; i < sites.size(); ++i)
                sites[i] = i;
        }
        if (sites.empty())
            throw InvalidArgumentError("degrade: empty blob placement domain");
        const int r = noise.fp_blob_radius;
        for (int b = 0; b < noise.fp_blob_count; ++b) {
            bool placed = false;
            for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
                const std::size_t site = sites[rng.below(sites.size())];
                const int cx = static_cast<int>(site % s.nx);
                const int cy = static_cast<int>((site / s.nx) % s.ny);
                const int cz = static_cast<int>(site / (std::size_t(s.nx) * s.ny));
                bool clean = true;
                for (int dz = -r; dz <= r && clean; ++dz)
                    for (int dy = -r; dy <= r && clean; ++dy)
                        for (int dx = -r; dx <= r && clean; ++dx) {
                            if (dx * dx + dy * dy + dz * dz > r * r)
                                continue;
                            if (is_lesion(cx + dx, cy + dy, cz + dz))
                                clean = false;
                        }
                if (!clean)
                    continue;
                for (int dz = -r; dz <= r; ++dz)
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx) {
                            if (dx * dx + dy * dy + dz * dz > r * r)
                                continue;
                            const int x = cx + dx, y = cy + dy, z = cz + dz;
                            if (x < 0 || y < 0 || z < 0 || x >= s.nx ||
                                y >= s.ny || z >= s.nz)
                                continue;
                            if (domain && !domain->at(x, y, z))
                                continue;
                            out.at(x, y, z) = 1;
                        }
                placed = true;
            }
            if (!placed)
                throw InvalidArgumentError(
                    "degrade: could not place a false-positive blob clear of "
                    "the lesion after 1000 attempts");
        }
    }
    return out;
}

} // namespace voxfuse

#endif
