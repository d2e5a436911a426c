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

#ifndef VOXFUSE_REGIONS_HPP
#define VOXFUSE_REGIONS_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "voxfuse/volume.hpp"

namespace voxfuse {

// Super-region bookkeeping. The brain is partitioned into four labeled
// super-regions (1..4) by an atlas volume supplied as input; groups of
// regions route predictions to specialized ensembles and can be merged
// (e.g. regions 1 and 4 evaluated as one group).

/// A non-empty subset of the labels {1,2,3,4} with a display name.
class RegionSet {
public:
    RegionSet(std::initializer_list<int> ids)
        : RegionSet(std::vector<int>(ids)) {}

    explicit RegionSet(std::vector<int> ids, std::string display_name = "")
        : ids_(std::move(ids)), name_(std::move(display_name)) {
        std::sort(ids_.begin(), ids_.end());
        ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
        if (ids_.empty())
            throw InvalidArgumentError("region set must be non-empty");
        for (int id : ids_)
            if (id < 1 || id > AtlasVolume::k_max_label)
                throw InvalidArgumentError("region id " + std::to_string(id) +
                                           " outside {1..4}");
        if (name_.empty())
            name_ = canonical_name(ids_);
    }

    const std::vector<int>& ids() const { return ids_; }
    const std::string& name() const { return name_; }

    bool contains(int label) const {
        return std::binary_search(ids_.begin(), ids_.end(), label);
    }

    static std::string canonical_name(const std::vector<int>& ids) {
        std::string s;
        for (int id : ids) {
            if (!s.empty())
                s += "+";
            s += "R" + std::to_string(id);
        }
        return s;
    }

    friend bool operator==(const RegionSet& a, const RegionSet& b) {
        return a.ids_ == b.ids_;
    }

private:
    std::vector<int> ids_;
    std::string name_;
};

/// Union of two region sets under the canonical "R1+R4" naming.
inline RegionSet merge_regions(const RegionSet& a, const RegionSet& b) {
    std::vector<int> ids = a.ids();
    ids.insert(ids.end(), b.ids().begin(), b.ids().end());
    return RegionSet(std::move(ids));
}

/// Per-region lesion overlap tally. `dominant` holds every region id
/// with a nonzero count, ordered by count descending with ties broken
/// by ascending id.
struct RegionAssignment {
    std::array<std::int64_t, AtlasVolume::k_max_label + 1> counts{};
    std::vector<int> dominant;
    std::int64_t lesion_voxels = 0;
};

inline RegionAssignment assign_regions(const BinaryVolume& lesion,
                                       const AtlasVolume& atlas) {
    require_same_counts(lesion.shape, atlas.shape, "assign_regions");
    RegionAssignment r;
    const std::size_t n = lesion.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (lesion.data[i]) {
            ++r.lesion_voxels;
            ++r.counts[atlas.data[i]];
        }
    }
    std::vector<int> ids;
    for (int id = 1; id <= AtlasVolume::k_max_label; ++id)
        if (r.counts[id] > 0)
            ids.push_back(id);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        if (r.counts[a] != r.counts[b])
            return r.counts[a] > r.counts[b];
        return a < b;
    });
    r.dominant = std::move(ids);
    return r;
}

/// Stitches per-region predictions into one whole-brain mask. The region
/// sets must be pairwise disjoint and jointly cover {1,2,3,4}; each
/// prediction contributes only inside its own regions, and atlas
/// background (label 0) voxels are never set.
inline BinaryVolume compose_regionwise(
    const std::vector<std::pair<RegionSet, BinaryVolume>>& per_region,
    const AtlasVolume& atlas) {
    if (per_region.empty())
        throw InvalidArgumentError("compose_regionwise: no region entries");
    std::array<int, AtlasVolume::k_max_label + 1> owner{};
    owner.fill(-1);
    for (std::size_t e = 0; e < per_region.size(); ++e) {
        for (int id : per_region[e].first.ids()) {
            if (owner[id] >= 0)
                throw InvalidArgumentError(
                    "compose_regionwise: region " + std::to_string(id) +
                    " claimed by both '" +
                    per_region[owner[id]].first.name() + "' and '" +
                    per_region[e].first.name() + "'");
            owner[id] = static_cast<int>(e);
        }
    }
    for (int id = 1; id <= AtlasVolume::k_max_label; ++id)
        if (owner[id] < 0)
            throw InvalidArgumentError(
                "compose_regionwise: region " + std::to_string(id) +
                " not covered by any entry");
    for (const auto& [regions, pred] : per_region)
        require_same_counts(pred.shape, atlas.shape, "compose_regionwise");

    BinaryVolume out(per_region.front().second.shape);
    const std::size_t n = out.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        const int label = atlas.data[i];
        if (label == 0)
            continue;
        out.data[i] = per_region[owner[label]].second.data[i];
    }
    return out;
}

/// Mask of all labeled (non-background) atlas voxels.
inline BinaryVolume brain_mask(const AtlasVolume& atlas) {
    BinaryVolume out(atlas.shape);
    for (std::size_t i = 0; i < atlas.data.size(); ++i)
        out.data[i] = atlas.data[i] != 0;
    return out;
}

} // namespace voxfuse

#endif
