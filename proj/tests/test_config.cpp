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

#include "temp_dir.hpp"
#include "voxfuse/config.hpp"
#include "voxfuse/io.hpp"

using namespace voxfuse;
using testutil::TempDir;

TEST_CASE("key=value parsing: comments, blanks, trimming, order",
          "[config]") {
    const KeyValueFile kv = KeyValueFile::parse("# comment\n"
                                                "\n"
                                                "  a = 1  \n"
                                                "b=two words\n"
                                                "a = 3\n");
    REQUIRE(kv.get_all("a") == std::vector<std::string>{"1", "3"});
    REQUIRE(*kv.get("b") == "two words");
    REQUIRE_FALSE(kv.get("c").has_value());
}

TEST_CASE("key=value parsing errors carry line numbers", "[config]") {
    REQUIRE_THROWS_WITH(KeyValueFile::parse("a = 1\nbroken line\n", "f.cfg"),
                        Catch::Matchers::ContainsSubstring("f.cfg:2"));
    REQUIRE_THROWS_WITH(KeyValueFile::parse("= x\n", "f.cfg"),
                        Catch::Matchers::ContainsSubstring("empty key"));
}

TEST_CASE("scalar lookups reject repeated keys and bad numbers", "[config]") {
    const KeyValueFile kv = KeyValueFile::parse("a = 1\na = 2\nn = x\n");
    REQUIRE_THROWS_AS(kv.get("a"), ConfigError);
    REQUIRE_THROWS_AS(kv.get_int("n", 0), ConfigError);
    REQUIRE_THROWS_AS(kv.get_double("n", 0.0), ConfigError);
    REQUIRE(kv.get_int("missing", 7) == 7);
}

TEST_CASE("with_prefix returns suffix/value pairs in order", "[config]") {
    const KeyValueFile kv =
        KeyValueFile::parse("s.a.x = 1\ns.a.y = 2\nother = 3\n");
    const auto got = kv.with_prefix("s.a.");
    REQUIRE(got.size() == 2);
    REQUIRE(got[0].first == "x");
    REQUIRE(got[1].second == "2");
}

namespace {

// A minimal on-disk cohort: two subjects, two models, atlas and tract.
struct MiniCohort {
    TempDir dir{"cfg"};

    MiniCohort() {
        const GridShape s(4, 4, 4);
        BinaryVolume mask(s);
        mask.at(1, 1, 1) = 1;
        WeightedVolume tract(s);
        tract.at(1, 1, 1) = 1.0f;
        AtlasVolume atlas(s, std::vector<std::uint8_t>(s.voxel_count(), 1));
        write_vxf1(atlas, dir / "atlas.vxf");
        write_vxf1(tract, dir / "tract.vxf");
        for (const char* subj : {"s1", "s2"}) {
            std::filesystem::create_directories(dir / subj);
            write_vxf1(mask, dir.path() / subj / "truth.vxf");
            write_vxf1(mask, dir.path() / subj / "a.vxf");
            write_vxf1(mask, dir.path() / subj / "b.vxf");
        }
    }

    std::filesystem::path write_config(const std::string& body) const {
        const auto p = dir / "run.cfg";
        testutil::write_text(p, body);
        return p;
    }

    std::string base_config() const {
        return "atlas = atlas.vxf\n"
               "tract = tract.vxf\n"
               "subject = s1\n"
               "subject.s1.truth = s1/truth.vxf\n"
               "subject.s1.pred.a = s1/a.vxf\n"
               "subject.s1.pred.b = s1/b.vxf\n"
               "subject = s2\n"
               "subject.s2.truth = s2/truth.vxf\n"
               "subject.s2.pred.a = s2/a.vxf\n"
               "subject.s2.pred.b = s2/b.vxf\n";
    }
};

} // namespace

TEST_CASE("run config loads subjects, presets and options", "[config]") {
    MiniCohort m;
    const auto path = m.write_config(m.base_config() +
                                     "out_dir = out\n"
                                     "jobs = 3\n"
                                     "severity.t1 = 0.2\n"
                                     "severity.t2 = 1.5\n"
                                     "severity.measure = normalized\n"
                                     "side.convention = radiological\n"
                                     "preset = stack2\n"
                                     "preset.stack2.method = stack\n"
                                     "preset.stack2.member = a\n"
                                     "preset.stack2.member = b\n"
                                     "preset = aw\n"
                                     "preset.aw.method = agreement_window\n"
                                     "preset.aw.member = a\n"
                                     "preset.aw.member = b\n"
                                     "preset.aw.window = 2\n"
                                     "preset.aw.threshold = 0.75\n"
                                     "preset.aw.stride = 2\n");
    const RunConfig cfg = load_run_config(path);
    REQUIRE(cfg.subjects.size() == 2);
    REQUIRE(cfg.subjects[0].id == "s1");
    REQUIRE(cfg.subjects[0].predictions.size() == 2);
    REQUIRE(cfg.presets.size() == 2);
    REQUIRE(cfg.jobs == 3);
    REQUIRE(cfg.thresholds.t1 == 0.2);
    REQUIRE(cfg.category_measure == LoadMeasure::Normalized);
    REQUIRE(cfg.side_convention == SideConvention::Radiological);
    REQUIRE(cfg.out_dir.filename() == "out");

    const PresetSpec* aw = cfg.find_preset("aw");
    REQUIRE(aw != nullptr);
    REQUIRE(aw->whole.method == FusionMethod::AgreementWindow);
    REQUIRE(aw->whole.window == 2);
    REQUIRE(aw->whole.overlap_threshold == 0.75);
    REQUIRE(aw->whole.stride == 2);
    REQUIRE(aw->member_ids() == std::vector<std::string>{"a", "b"});
    // paths resolve relative to the config file
    REQUIRE(std::filesystem::exists(cfg.subjects[0].truth));
}

TEST_CASE("run config validation failures", "[config]") {
    MiniCohort m;

    SECTION("missing truth file names the path") {
        const auto p = m.write_config("tract = tract.vxf\n"
                                      "subject = s9\n"
                                      "subject.s9.truth = s9/absent.vxf\n");
        REQUIRE_THROWS_WITH(load_run_config(p),
                            Catch::Matchers::ContainsSubstring("absent.vxf"));
    }
    SECTION("duplicate subject") {
        const auto p = m.write_config(m.base_config() + "subject = s1\n");
        REQUIRE_THROWS_WITH(load_run_config(p),
                            Catch::Matchers::ContainsSubstring("duplicate"));
    }
    SECTION("duplicate preset") {
        const auto p = m.write_config(m.base_config() +
                                      "preset = x\npreset.x.method = stack\n"
                                      "preset.x.member = a\n"
                                      "preset = x\n");
        REQUIRE_THROWS_AS(load_run_config(p), ConfigError);
    }
    SECTION("invalid threshold") {
        const auto p = m.write_config(
            m.base_config() + "preset = x\npreset.x.method = agreement_window\n"
                              "preset.x.member = a\npreset.x.threshold = 1.5\n");
        REQUIRE_THROWS_AS(load_run_config(p), ConfigError);
    }
    SECTION("unknown method") {
        const auto p = m.write_config(m.base_config() +
                                      "preset = x\npreset.x.method = voting\n"
                                      "preset.x.member = a\n");
        REQUIRE_THROWS_WITH(load_run_config(p),
                            Catch::Matchers::ContainsSubstring("voting"));
    }
    SECTION("preset needs a model a subject lacks") {
        const auto p = m.write_config(m.base_config() +
                                      "preset = x\npreset.x.method = stack\n"
                                      "preset.x.member = missing_model\n");
        REQUIRE_THROWS_WITH(
            load_run_config(p),
            Catch::Matchers::ContainsSubstring("missing_model"));
    }
    SECTION("bad severity thresholds") {
        const auto p = m.write_config(m.base_config() + "severity.t1 = 3\n" +
                                      "severity.t2 = 1\n");
        REQUIRE_THROWS_AS(load_run_config(p), ConfigError);
    }
}

TEST_CASE("regionwise presets parse and validate their cover", "[config]") {
    MiniCohort m;
    const std::string groups = "preset = srw\n"
                               "preset.srw.method = regionwise\n"
                               "preset.srw.group = 1+4\n"
                               "preset.srw.group.1+4.method = "
                               "agreement_window\n"
                               "preset.srw.group.1+4.member = a\n"
                               "preset.srw.group.1+4.member = b\n"
                               "preset.srw.group.1+4.window = 2\n"
                               "preset.srw.group.1+4.threshold = 0.75\n"
                               "preset.srw.group = 2\n"
                               "preset.srw.group.2.method = stack\n"
                               "preset.srw.group.2.member = a\n"
                               "preset.srw.group = 3\n"
                               "preset.srw.group.3.method = stack\n"
                               "preset.srw.group.3.member = b\n";
    const RunConfig cfg = load_run_config(m.write_config(m.base_config() +
                                                         groups));
    const PresetSpec* srw = cfg.find_preset("srw");
    REQUIRE(srw != nullptr);
    REQUIRE(srw->regionwise);
    REQUIRE(srw->groups.size() == 3);
    REQUIRE(srw->groups[0].regions == RegionSet{{1, 4}});
    REQUIRE(srw->groups[0].spec.overlap_threshold == 0.75);
    REQUIRE(srw->member_ids() == std::vector<std::string>{"a", "b"});

    SECTION("incomplete cover") {
        const auto p = m.write_config(m.base_config() +
                                      "preset = bad\n"
                                      "preset.bad.method = regionwise\n"
                                      "preset.bad.group = 1+4\n"
                                      "preset.bad.group.1+4.method = stack\n"
                                      "preset.bad.group.1+4.member = a\n");
        REQUIRE_THROWS_WITH(load_run_config(p),
                            Catch::Matchers::ContainsSubstring("not covered"));
    }
    SECTION("overlapping groups") {
        const auto p = m.write_config(
            m.base_config() + "preset = bad\n"
                              "preset.bad.method = regionwise\n"
                              "preset.bad.group = 1+2+3+4\n"
                              "preset.bad.group.1+2+3+4.method = stack\n"
                              "preset.bad.group.1+2+3+4.member = a\n"
                              "preset.bad.group = 2\n"
                              "preset.bad.group.2.method = stack\n"
                              "preset.bad.group.2.member = a\n");
        REQUIRE_THROWS_WITH(load_run_config(p),
                            Catch::Matchers::ContainsSubstring("more than one"));
    }
    SECTION("regionwise needs an atlas") {
        std::string no_atlas = m.base_config() + groups;
        no_atlas.erase(no_atlas.find("atlas = atlas.vxf\n"), 18);
        const auto p = m.write_config(no_atlas);
        REQUIRE_THROWS_WITH(load_run_config(p),
                            Catch::Matchers::ContainsSubstring("atlas"));
    }
}

TEST_CASE("cohort spec parsing with defaults and overrides", "[config]") {
    TempDir dir("cohort_spec");
    const auto p = dir / "spec.cfg";
    testutil::write_text(p, "seed = 9\n"
                            "subjects = 5\n"
                            "models = 2\n"
                            "shape.nx = 32\n"
                            "shape.ny = 32\n"
                            "shape.nz = 16\n"
                            "noise.jitter = 0.25\n"
                            "noise.blobs = 4\n");
    const CohortSpec spec = load_cohort_spec(p);
    REQUIRE(spec.seed == 9);
    REQUIRE(spec.subjects == 5);
    REQUIRE(spec.models == 2);
    REQUIRE(spec.shape.nx == 32);
    REQUIRE(spec.shape.nz == 16);
    REQUIRE(spec.shape.sx == 2.0); // default spacing kept
    REQUIRE(spec.noise.boundary_jitter == 0.25);
    REQUIRE(spec.noise.fp_blob_count == 4);
    REQUIRE(spec.noise.dropout == 0.12); // calibrated default

    testutil::write_text(p, "subjects = 0\n");
    REQUIRE_THROWS_AS(load_cohort_spec(p), ConfigError);
    testutil::write_text(p, "noise.jitter = 2\n");
    REQUIRE_THROWS_AS(load_cohort_spec(p), ConfigError);
    testutil::write_text(p, "shape.nx = -4\n");
    REQUIRE_THROWS_AS(load_cohort_spec(p), ConfigError);
}
