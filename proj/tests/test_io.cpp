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

#include "nifti_fixtures.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"
#include "voxfuse/io.hpp"

using namespace voxfuse;
using testutil::TempDir;
using testutil::byteswap_nifti;

TEST_CASE("nifti round trip for all three kinds", "[io]") {
    TempDir dir("nifti_rt");
    Rng rng(3);
    for (int it = 0; it < 10; ++it) {
        const GridShape s = oracle::random_shape(rng, 2, 9);

        const BinaryVolume mask = oracle::random_mask(rng, s, 0.5);
        write_nifti(mask, dir / "m.nii");
        ReadInfo info;
        const BinaryVolume mask_back = read_binary_volume(dir / "m.nii", &info);
        REQUIRE(mask_back.data == mask.data);
        REQUIRE(mask_back.shape.same_counts(s));
        REQUIRE(mask_back.shape.same_spacing(s, 1e-5));
        REQUIRE(info.format == FileFormat::Nifti);
        REQUIRE_FALSE(info.byte_swapped);

        const WeightedVolume weights = oracle::random_weights(rng, s, 3.0);
        write_nifti(weights, dir / "w.nii");
        REQUIRE(read_weighted_volume(dir / "w.nii").data == weights.data);

        const AtlasVolume atlas = oracle::random_atlas(rng, s);
        write_nifti(atlas, dir / "a.nii");
        REQUIRE(read_atlas_volume(dir / "a.nii").data == atlas.data);
    }
}

TEST_CASE("written nifti has the fixed single-file layout", "[io]") {
    TempDir dir("nifti_layout");
    const BinaryVolume zeros{GridShape(2, 2, 2)};
    write_nifti(zeros, dir / "z.nii");
    REQUIRE(std::filesystem::file_size(dir / "z.nii") == 352 + 8);

    const NiftiHeaderView h = read_nifti_header(dir / "z.nii");
    REQUIRE(h.sizeof_hdr == 348);
    REQUIRE(h.dim[0] == 3);
    REQUIRE(h.datatype == 2);
    REQUIRE(h.bitpix == 8);
    REQUIRE(h.vox_offset == 352.0f);
    REQUIRE(h.scl_slope == 1.0f);
    REQUIRE(h.scl_inter == 0.0f);
    REQUIRE(std::string(h.magic.data(), 3) == "n+1");
}

TEST_CASE("atlas labels land at the expected payload offset", "[io]") {
    TempDir dir("nifti_offset");
    const GridShape s(3, 3, 3);
    AtlasVolume atlas(s);
    atlas.at(1, 2, 0) = 4;
    write_nifti(atlas, dir / "a.nii");
    const auto bytes = testutil::read_bytes(dir / "a.nii");
    REQUIRE(bytes.at(352 + s.index(1, 2, 0)) == 4);
}

TEST_CASE("scl_slope rescales values before the binary threshold", "[io]") {
    TempDir dir("nifti_slope");
    const GridShape s(1, 1, 1);
    write_nifti(WeightedVolume(s, {0.3f}), dir / "f.nii");
    auto bytes = testutil::read_bytes(dir / "f.nii");
    // patch scl_slope (offset 112) to 2.0f little-endian
    const float two = 2.0f;
    std::memcpy(bytes.data() + 112, &two, 4);
    testutil::write_bytes(dir / "f.nii", bytes);
    // raw 0.3 * 2.0 = 0.6 > 0.5
    REQUIRE(read_binary_volume(dir / "f.nii").data[0] == 1);
    REQUIRE(read_weighted_volume(dir / "f.nii").data[0] ==
            Catch::Approx(0.6).margin(1e-6));
}

TEST_CASE("byte-swapped files decode identically to their native twin",
          "[io]") {
    TempDir dir("nifti_swap");
    Rng rng(7);
    const GridShape s(5, 4, 3, 1.5, 2.0, 0.75);

    const WeightedVolume w = oracle::random_weights(rng, s, 2.0);
    write_nifti(w, dir / "w.nii");
    testutil::write_bytes(dir / "w_swapped.nii",
                          byteswap_nifti(testutil::read_bytes(dir / "w.nii"),
                                         4));
    ReadInfo info;
    const WeightedVolume swapped =
        read_weighted_volume(dir / "w_swapped.nii", &info);
    REQUIRE(info.byte_swapped);
    REQUIRE(swapped.data == w.data);
    REQUIRE(swapped.shape.same_spacing(s, 1e-5));

    const BinaryVolume m = oracle::random_mask(rng, s, 0.5);
    write_nifti(m, dir / "m.nii");
    testutil::write_bytes(dir / "m_swapped.nii",
                          byteswap_nifti(testutil::read_bytes(dir / "m.nii"),
                                         1));
    REQUIRE(read_binary_volume(dir / "m_swapped.nii").data == m.data);
}

TEST_CASE("int16 payloads decode with clamping and thresholding", "[io]") {
    TempDir dir("nifti_i16");
    // craft an int16 file from a written uint8 file by patching datatype,
    // bitpix and payload
    const GridShape s(4, 1, 1);
    write_nifti(BinaryVolume(s), dir / "base.nii");
    auto bytes = testutil::read_bytes(dir / "base.nii");
    const std::int16_t dt = 4, bp = 16;
    std::memcpy(bytes.data() + 70, &dt, 2);
    std::memcpy(bytes.data() + 72, &bp, 2);
    bytes.resize(352);
    const std::int16_t values[4] = {-2, 0, 1, 300};
    for (int i = 0; i < 4; ++i) {
        const auto* p = reinterpret_cast<const unsigned char*>(&values[i]);
        bytes.push_back(p[0]);
        bytes.push_back(p[1]);
    }
    testutil::write_bytes(dir / "i16.nii", bytes);

    ReadInfo info;
    const WeightedVolume w = read_weighted_volume(dir / "i16.nii", &info);
    REQUIRE(w.data == std::vector<float>{0.0f, 0.0f, 1.0f, 300.0f});
    REQUIRE(info.negatives_clamped == 1);

    const BinaryVolume b = read_binary_volume(dir / "i16.nii");
    REQUIRE(b.data == std::vector<std::uint8_t>{0, 0, 1, 1});

    REQUIRE_THROWS_AS(read_atlas_volume(dir / "i16.nii"), FormatError);
}

TEST_CASE("non-positive pixdim entries default to 1 mm with a warning count",
          "[io]") {
    TempDir dir("nifti_pixdim");
    write_nifti(BinaryVolume{GridShape(2, 2, 2)}, dir / "m.nii");
    auto bytes = testutil::read_bytes(dir / "m.nii");
    const float zero = 0.0f, neg = -3.0f;
    std::memcpy(bytes.data() + 80, &zero, 4); // pixdim[1]
    std::memcpy(bytes.data() + 84, &neg, 4);  // pixdim[2]
    testutil::write_bytes(dir / "m.nii", bytes);
    ReadInfo info;
    const BinaryVolume m = read_binary_volume(dir / "m.nii", &info);
    REQUIRE(info.spacing_axes_defaulted == 2);
    REQUIRE(m.shape.sx == 1.0);
    REQUIRE(m.shape.sy == 1.0);
}

TEST_CASE("malformed nifti files are rejected with clear errors", "[io]") {
    TempDir dir("nifti_bad");
    const GridShape s(2, 2, 2);
    write_nifti(BinaryVolume(s), dir / "good.nii");
    const auto good = testutil::read_bytes(dir / "good.nii");

    auto patched = [&](auto mutate) {
        auto bytes = good;
        mutate(bytes);
        testutil::write_bytes(dir / "bad.nii", bytes);
        return dir / "bad.nii";
    };

    SECTION("paired-file magic") {
        const auto p = patched([](auto& b) { std::memcpy(&b[344], "ni1", 4); });
        REQUIRE_THROWS_WITH(read_binary_volume(p),
                            Catch::Matchers::ContainsSubstring("ni1"));
    }
    SECTION("garbage magic") {
        const auto p = patched([](auto& b) { std::memcpy(&b[344], "xxx", 4); });
        REQUIRE_THROWS_AS(read_binary_volume(p), FormatError);
    }
    SECTION("wrong sizeof_hdr") {
        const auto p = patched([](auto& b) { b[0] = 99; });
        REQUIRE_THROWS_WITH(read_binary_volume(p),
                            Catch::Matchers::ContainsSubstring("348"));
    }
    SECTION("4D volume") {
        const auto p = patched([](auto& b) { b[40] = 4; });
        REQUIRE_THROWS_AS(read_binary_volume(p), FormatError);
    }
    SECTION("unsupported datatype") {
        const auto p = patched([](auto& b) {
            b[70] = 8; // int32
            b[72] = 32;
        });
        REQUIRE_THROWS_WITH(read_binary_volume(p),
                            Catch::Matchers::ContainsSubstring("datatype"));
    }
    SECTION("vox_offset below 352") {
        const auto p = patched([](auto& b) {
            const float off = 300.0f;
            std::memcpy(&b[108], &off, 4);
        });
        REQUIRE_THROWS_AS(read_binary_volume(p), FormatError);
    }
    SECTION("truncated header") {
        auto bytes = good;
        bytes.resize(100);
        testutil::write_bytes(dir / "bad.nii", bytes);
        REQUIRE_THROWS_AS(read_binary_volume(dir / "bad.nii"), FormatError);
    }
    SECTION("truncated payload") {
        auto bytes = good;
        bytes.resize(bytes.size() - 3);
        testutil::write_bytes(dir / "bad.nii", bytes);
        REQUIRE_THROWS_WITH(read_binary_volume(dir / "bad.nii"),
                            Catch::Matchers::ContainsSubstring("truncated"));
    }
    SECTION("gzip stream") {
        testutil::write_bytes(dir / "bad.nii",
                              {0x1f, 0x8b, 0x08, 0x00, 0x00, 0x00});
        REQUIRE_THROWS_WITH(read_binary_volume(dir / "bad.nii"),
                            Catch::Matchers::ContainsSubstring("gzip"));
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(read_binary_volume(dir / "absent.nii"), IoError);
    }
}

TEST_CASE("atlas reads reject labels outside 0..4", "[io]") {
    TempDir dir("nifti_label");
    const GridShape s(2, 2, 2);
    WeightedVolume w(s, std::vector<float>(8, 0.0f));
    w.data[3] = 7.0f;
    write_nifti(w, dir / "labels.nii");
    REQUIRE_THROWS_WITH(read_atlas_volume(dir / "labels.nii"),
                        Catch::Matchers::ContainsSubstring("7"));
}

TEST_CASE("weighted reads clamp negatives and count them", "[io]") {
    TempDir dir("nifti_neg");
    const GridShape s(3, 1, 1);
    // bypass WeightedVolume validation by writing floats through a patch
    write_nifti(WeightedVolume(s, {1.0f, 0.0f, 2.0f}), dir / "w.nii");
    auto bytes = testutil::read_bytes(dir / "w.nii");
    const float neg = -1.5f;
    std::memcpy(bytes.data() + 352 + 4, &neg, 4);
    testutil::write_bytes(dir / "w.nii", bytes);
    ReadInfo info;
    const WeightedVolume w = read_weighted_volume(dir / "w.nii", &info);
    REQUIRE(info.negatives_clamped == 1);
    REQUIRE(w.data[1] == 0.0f);
    // the same value read as a mask is simply 0
    REQUIRE(read_binary_volume(dir / "w.nii").data ==
            std::vector<std::uint8_t>{1, 0, 1});
}

TEST_CASE("orientation metadata survives a write-read cycle", "[io]") {
    TempDir dir("nifti_orient");
    NiftiOrientation orient;
    orient.qform_code = 1;
    orient.sform_code = 2;
    orient.quatern_b = 0.5f;
    orient.qoffset_x = -90.0f;
    orient.srow_x = {1.0f, 0.0f, 0.0f, -90.0f};
    const BinaryVolume m{GridShape(2, 2, 2)};
    write_nifti(m, dir / "m.nii", NiftiDatatype::Uint8, &orient);
    ReadInfo info;
    read_binary_volume(dir / "m.nii", &info);
    REQUIRE(info.orientation.qform_code == 1);
    REQUIRE(info.orientation.sform_code == 2);
    REQUIRE(info.orientation.quatern_b == 0.5f);
    REQUIRE(info.orientation.qoffset_x == -90.0f);
    REQUIRE(info.orientation.srow_x[3] == -90.0f);
}

TEST_CASE("incompatible write datatypes are rejected", "[io]") {
    TempDir dir("nifti_dt");
    REQUIRE_THROWS_AS(write_nifti(BinaryVolume{GridShape(2, 2, 2)},
                                  dir / "x.nii", NiftiDatatype::Float32),
                      InvalidArgumentError);
    REQUIRE_THROWS_AS(write_nifti(WeightedVolume{GridShape(2, 2, 2)},
                                  dir / "x.nii", NiftiDatatype::Uint8),
                      InvalidArgumentError);
    REQUIRE_THROWS_AS(write_nifti(AtlasVolume{GridShape(2, 2, 2)},
                                  dir / "x.nii", NiftiDatatype::Int16),
                      InvalidArgumentError);
}

TEST_CASE("vxf1 round trip and exact layout", "[io]") {
    TempDir dir("vxf");
    Rng rng(11);
    for (int it = 0; it < 10; ++it) {
        const GridShape s = oracle::random_shape(rng, 1, 7);
        const BinaryVolume m = oracle::random_mask(rng, s, 0.5);
        write_vxf1(m, dir / "m.vxf");
        REQUIRE(read_binary_volume(dir / "m.vxf").data == m.data);

        const WeightedVolume w = oracle::random_weights(rng, s, 5.0);
        write_vxf1(w, dir / "w.vxf");
        REQUIRE(read_weighted_volume(dir / "w.vxf").data == w.data);

        const AtlasVolume a = oracle::random_atlas(rng, s);
        write_vxf1(a, dir / "a.vxf");
        REQUIRE(read_atlas_volume(dir / "a.vxf").data == a.data);
    }

    write_vxf1(BinaryVolume{GridShape(1, 1, 1)}, dir / "tiny.vxf");
    REQUIRE(std::filesystem::file_size(dir / "tiny.vxf") == 30);
}

TEST_CASE("vxf1 rejects bad magic, dtype and truncation", "[io]") {
    TempDir dir("vxf_bad");
    write_vxf1(BinaryVolume{GridShape(2, 2, 2)}, dir / "m.vxf");
    auto bytes = testutil::read_bytes(dir / "m.vxf");

    auto corrupted = bytes;
    std::memcpy(corrupted.data(), "XXXX", 4);
    testutil::write_bytes(dir / "bad.vxf", corrupted);
    // unknown magic falls through to the NIfTI parser, which rejects it
    REQUIRE_THROWS_AS(read_binary_volume(dir / "bad.vxf"), FormatError);

    corrupted = bytes;
    corrupted[28] = 3;
    testutil::write_bytes(dir / "bad.vxf", corrupted);
    REQUIRE_THROWS_WITH(read_binary_volume(dir / "bad.vxf"),
                        Catch::Matchers::ContainsSubstring("dtype"));

    corrupted = bytes;
    corrupted.resize(bytes.size() - 2);
    testutil::write_bytes(dir / "bad.vxf", corrupted);
    REQUIRE_THROWS_WITH(read_binary_volume(dir / "bad.vxf"),
                        Catch::Matchers::ContainsSubstring("truncated"));

    corrupted.resize(10);
    testutil::write_bytes(dir / "bad.vxf", corrupted);
    REQUIRE_THROWS_AS(read_binary_volume(dir / "bad.vxf"), FormatError);
}

TEST_CASE("write_volume dispatches on the extension", "[io]") {
    TempDir dir("dispatch");
    Rng rng(13);
    const BinaryVolume m = oracle::random_mask(rng, GridShape(3, 3, 3), 0.5);
    write_volume(m, dir / "m.vxf");
    write_volume(m, dir / "m.nii");
    const auto vxf = testutil::read_bytes(dir / "m.vxf");
    REQUIRE(std::memcmp(vxf.data(), "VXF1", 4) == 0);
    const auto nii = testutil::read_bytes(dir / "m.nii");
    REQUIRE(nii.size() >= 352);
    REQUIRE(read_binary_volume(dir / "m.vxf").data ==
            read_binary_volume(dir / "m.nii").data);
}

TEST_CASE("axial slice export writes one vxf per plane", "[io]") {
    TempDir dir("slices");
    Rng rng(17);
    const GridShape s(4, 5, 3);
    const BinaryVolume m = oracle::random_mask(rng, s, 0.5);
    const auto written = export_axial_slices(m, dir.path(), "subject1");
    REQUIRE(written.size() == 3);
    REQUIRE(written[0].filename() == "subject1_z0000.vxf");
    REQUIRE(written[2].filename() == "subject1_z0002.vxf");
    std::vector<BinaryVolume> planes;
    for (const auto& p : written)
        planes.push_back(read_binary_volume(p));
    REQUIRE(oracle::equal_mask(restack_axial(planes), m));
}

TEST_CASE("inspect_volume summarizes a file", "[io]") {
    TempDir dir("inspect");
    const GridShape s(4, 4, 2, 2.0, 2.0, 2.0);
    WeightedVolume w(s);
    w.at(0, 0, 0) = 3.5f;
    w.at(1, 0, 0) = 1.0f;
    write_nifti(w, dir / "w.nii");
    const VolumeFileSummary sum = inspect_volume(dir / "w.nii");
    REQUIRE(sum.format == FileFormat::Nifti);
    REQUIRE(sum.datatype == "float32");
    REQUIRE(sum.shape.same_counts(s));
    REQUIRE(sum.nonzero == 2);
    REQUIRE(sum.max_value == Catch::Approx(3.5));
    REQUIRE(sum.nonzero_volume_mm3 == Catch::Approx(16.0));
}
