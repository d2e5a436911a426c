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

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "voxfuse/regions.hpp"

using namespace voxfuse;

TEST_CASE("region sets validate, dedupe and name themselves", "[regions]") {
    REQUIRE_THROWS_AS(RegionSet(std::vector<int>{}), InvalidArgumentError);
    REQUIRE_THROWS_AS(RegionSet({0}), InvalidArgumentError);
    REQUIRE_THROWS_AS(RegionSet({5}), InvalidArgumentError);
    const RegionSet r({4, 1, 4});
    REQUIRE(r.ids() == std::vector<int>{1, 4});
    REQUIRE(r.name() == "R1+R4");
    REQUIRE(r.contains(4));
    REQUIRE_FALSE(r.contains(2));
    REQUIRE(RegionSet({2}, "cerebellum").name() == "cerebellum");
}

TEST_CASE("merge_regions unions ids", "[regions]") {
    REQUIRE(merge_regions(RegionSet{{1}}, RegionSet{{4}}) ==
            RegionSet{{1, 4}});
    REQUIRE(merge_regions(RegionSet{{2}}, RegionSet{{2}}) == RegionSet{{2}});
    REQUIRE(merge_regions(RegionSet{{1, 4}}, RegionSet{{3}}) ==
            RegionSet{{1, 3, 4}});
    REQUIRE(merge_regions(RegionSet{{1}}, RegionSet{{4}}).name() == "R1+R4");
}

TEST_CASE("merge_regions is commutative, associative, idempotent",
          "[regions]") {
    Rng rng(3);
    auto random_set = [&rng] {
        std::vector<int> ids;
        for (int id = 1; id <= 4; ++id)
            if (rng.bernoulli(0.5))
                ids.push_back(id);
        if (ids.empty())
            ids.push_back(static_cast<int>(rng.uniform_int(1, 4)));
        return RegionSet(ids);
    };
    for (int it = 0; it < 100; ++it) {
        const RegionSet a = random_set(), b = random_set(), c = random_set();
        REQUIRE(merge_regions(a, b) == merge_regions(b, a));
        REQUIRE(merge_regions(merge_regions(a, b), c) ==
                merge_regions(a, merge_regions(b, c)));
        REQUIRE(merge_regions(a, a) == a);
    }
}

TEST_CASE("assign_regions counts and dominant ordering", "[regions]") {
    const GridShape s(4, 4, 4);
    AtlasVolume atlas(s, std::vector<std::uint8_t>(s.voxel_count(), 2));

    BinaryVolume lesion(s);
    lesion.at(1, 1, 1) = 1;
    lesion.at(2, 2, 2) = 1;
    const RegionAssignment inside = assign_regions(lesion, atlas);
    REQUIRE(inside.counts[2] == 2);
    REQUIRE(inside.dominant == std::vector<int>{2});
    REQUIRE(inside.lesion_voxels == 2);

    const RegionAssignment empty = assign_regions(BinaryVolume(s), atlas);
    REQUIRE(empty.dominant.empty());
    REQUIRE(empty.lesion_voxels == 0);
    for (int id = 1; id <= 4; ++id)
        REQUIRE(empty.counts[id] == 0);
}

TEST_CASE("assign_regions ties break by ascending label", "[regions]") {
    const GridShape s(4, 1, 1);
    AtlasVolume atlas(s, {3, 3, 1, 1});
    BinaryVolume lesion(s, {1, 1, 1, 1});
    const RegionAssignment r = assign_regions(lesion, atlas);
    REQUIRE(r.counts[1] == 2);
    REQUIRE(r.counts[3] == 2);
    REQUIRE(r.dominant == std::vector<int>{1, 3});
}

TEST_CASE("assign_regions matches the voxel tally oracle", "[regions]") {
    Rng rng(11);
    for (int it = 0; it < 50; ++it) {
        const GridShape s(8, 8, 8);
        const BinaryVolume lesion = oracle::random_mask(rng, s, 0.3);
        const AtlasVolume atlas = oracle::random_atlas(rng, s);
        const RegionAssignment got = assign_regions(lesion, atlas);
        const auto want = oracle::region_counts(lesion, atlas);
        std::int64_t labelled = 0;
        for (int id = 1; id <= 4; ++id) {
            REQUIRE(got.counts[id] == want[id]);
            labelled += got.counts[id];
        }
        REQUIRE(labelled <= got.lesion_voxels);
        for (std::size_t k = 1; k < got.dominant.size(); ++k) {
            const auto prev = got.counts[got.dominant[k - 1]];
            const auto cur = got.counts[got.dominant[k]];
            REQUIRE((prev > cur ||
                     (prev == cur && got.dominant[k - 1] < got.dominant[k])));
        }
    }
}

TEST_CASE("compose_regionwise single full-cover entry gates by atlas",
          "[regions]") {
    Rng rng(19);
    const GridShape s(6, 6, 6);
    const AtlasVolume atlas = oracle::random_atlas(rng, s);
    const BinaryVolume pred = oracle::random_mask(rng, s, 0.5);
    const BinaryVolume out = compose_regionwise(
        {{RegionSet{{1, 2, 3, 4}}, pred}}, atlas);
    REQUIRE(oracle::equal_mask(out,
                               oracle::mask_restrict(pred, atlas,
                                                     {1, 2, 3, 4})));
    for (std::size_t i = 0; i < out.data.size(); ++i)
        if (atlas.data[i] == 0)
            REQUIRE(out.data[i] == 0);
}

TEST_CASE("compose_regionwise matches the gated union oracle", "[regions]") {
    Rng rng(29);
    for (int it = 0; it < 30; ++it) {
        const GridShape s(8, 8, 8);
        const AtlasVolume atlas = oracle::random_atlas(rng, s);
        std::vector<std::pair<RegionSet, BinaryVolume>> entries;
        entries.emplace_back(RegionSet{{1, 4}},
                             oracle::random_mask(rng, s, 0.4));
        entries.emplace_back(RegionSet{{2}}, oracle::random_mask(rng, s, 0.4));
        entries.emplace_back(RegionSet{{3}}, oracle::random_mask(rng, s, 0.4));
        const BinaryVolume got = compose_regionwise(entries, atlas);
        const BinaryVolume want = oracle::compose_regionwise(
            {{{1, 4}, entries[0].second},
             {{2}, entries[1].second},
             {{3}, entries[2].second}},
            atlas);
        REQUIRE(oracle::equal_mask(got, want));

        // locality: inside region r the output equals that entry's
        // prediction restricted to r
        for (const auto& [regions, pred] : entries) {
            const auto ids = regions.ids();
            const BinaryVolume lhs = mask_restrict(
                got, atlas, std::span<const int>(ids.data(), ids.size()));
            const BinaryVolume rhs = mask_restrict(
                pred, atlas, std::span<const int>(ids.data(), ids.size()));
            REQUIRE(oracle::equal_mask(lhs, rhs));
        }
    }
}

TEST_CASE("compose_regionwise with all-zero predictions is all-zero",
          "[regions]") {
    const GridShape s(4, 4, 4);
    AtlasVolume atlas(s, std::vector<std::uint8_t>(s.voxel_count(), 1));
    const BinaryVolume out = compose_regionwise(
        {{RegionSet{{1, 2}}, BinaryVolume(s)},
         {RegionSet{{3, 4}}, BinaryVolume(s)}},
        atlas);
    REQUIRE(out.count_set() == 0);
}

TEST_CASE("compose_regionwise validates cover and disjointness",
          "[regions]") {
    const GridShape s(2, 2, 2);
    const AtlasVolume atlas(s);
    const BinaryVolume m(s);
    REQUIRE_THROWS_AS(
        compose_regionwise({{RegionSet{{1, 2}}, m}, {RegionSet{{2, 3, 4}}, m}},
                           atlas),
        InvalidArgumentError);
    REQUIRE_THROWS_AS(
        compose_regionwise({{RegionSet{{1, 2}}, m}, {RegionSet{{3}}, m}},
                           atlas),
        InvalidArgumentError);
    REQUIRE_THROWS_AS(compose_regionwise({}, atlas), InvalidArgumentError);
}

TEST_CASE("brain_mask marks labelled voxels", "[regions]") {
    const GridShape s(2, 2, 1);
    AtlasVolume atlas(s, {0, 1, 4, 0});
    const BinaryVolume brain = brain_mask(atlas);
    REQUIRE(brain.data == std::vector<std::uint8_t>{0, 1, 1, 0});
}
