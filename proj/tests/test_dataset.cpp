#include "tacsim/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "support/temp_dir.hpp"
#include "tacsim/errors.hpp"

using namespace tacsim;
namespace fs = std::filesystem;

namespace {

SimRecording sample_recording() {
  SimRecording rec;
  rec.frame_rate = 30.0;
  rec.meta.id = "trial_007";
  rec.meta.seed = 99;
  rec.meta.note = "flat_round at (0.02, 0.01)";
  for (int t = 0; t < 3; ++t) {
    rec.times.push_back(t / 30.0);
    rec.contact_xy.push_back({0.02, 0.01});
    rec.force_trace.push_back(0.35 * t);
    StressFrameData frame;
    frame.push_back({0.0201, 0.0099, 0.0093, 1234.5 * t});
    frame.push_back({0.0188, 0.0102, 0.0095, 987.25 * t});
    rec.frames.push_back(frame);
  }
  return rec;
}

TaxelTrace sample_trace() {
  TaxelTrace trace;
  trace.rate_hz = 55.0;
  for (int k = 0; k < 4; ++k) {
    std::array<double, 8> row{};
    for (int i = 0; i < 8; ++i) row[static_cast<std::size_t>(i)] =
        101.0 + 0.01 * (k * 8 + i);
    trace.samples.push_back(row);
  }
  return trace;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("fnv-1a matches the published test vectors") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  CHECK(digest_hex(fnv1a64("")) == "cbf29ce484222325");
  CHECK(digest_hex(0x1ull) == "0000000000000001");
}

TEST_CASE("base64 matches the rfc vectors and round-trips") {
  CHECK(base64_encode("", 0) == "");
  CHECK(base64_encode("f", 1) == "Zg==");
  CHECK(base64_encode("fo", 2) == "Zm8=");
  CHECK(base64_encode("foo", 3) == "Zm9v");
  CHECK(base64_encode("foob", 4) == "Zm9vYg==");
  CHECK(base64_encode("fooba", 5) == "Zm9vYmE=");
  CHECK(base64_encode("foobar", 6) == "Zm9vYmFy");

  std::vector<unsigned char> all(256);
  for (int i = 0; i < 256; ++i) all[static_cast<std::size_t>(i)] =
      static_cast<unsigned char>(i);
  const std::string text = base64_encode(all.data(), all.size());
  CHECK(base64_decode(text) == all);
}

TEST_CASE("format_double round-trips exactly") {
  const double values[] = {0.0,    -0.0,   0.1,      1.0 / 3.0, 3.14159,
                           1e-7,   -3.5,   6.25e-23, 1e300,     101.33,
                           0.0001, 7.24e9};
  for (const double v : values) {
    const std::string text = format_double(v);
    CHECK(std::stod(text) == v);
    CHECK(format_double(std::stod(text)) == text);
  }
}

TEST_CASE("recording round-trips bit for bit") {
  const SimRecording rec = sample_recording();
  tacsim::testing::TempDir tmp("rec");
  write_recording(tmp.str(), rec);
  const SimRecording back = read_recording(tmp.str());
  CHECK(back.times == rec.times);
  CHECK(back.frames == rec.frames);
  CHECK(back.force_trace == rec.force_trace);
  CHECK(back.contact_xy == rec.contact_xy);
  CHECK(back.frame_rate == rec.frame_rate);
  CHECK(back.meta.id == rec.meta.id);
  CHECK(back.meta.seed == rec.meta.seed);
  CHECK(back.meta.note == rec.meta.note);

  SUBCASE("a flipped byte in the frame blob is rejected") {
    const std::string path = tmp.file("frames.bin");
    std::vector<unsigned char> bytes = read_binary_file(path);
    bytes[bytes.size() / 2] ^= 0x40;
    write_binary_file(path, bytes);
    CHECK_THROWS_AS(read_recording(tmp.str()), CorruptionError);
  }
  SUBCASE("a truncated frame blob is rejected") {
    const std::string path = tmp.file("frames.bin");
    std::vector<unsigned char> bytes = read_binary_file(path);
    bytes.resize(bytes.size() - 9);
    write_binary_file(path, bytes);
    CHECK_THROWS_AS(read_recording(tmp.str()), CorruptionError);
  }
  SUBCASE("inconsistent array lengths are rejected on write") {
    SimRecording bad = rec;
    bad.force_trace.pop_back();
    tacsim::testing::TempDir other("recbad");
    CHECK_THROWS_AS(write_recording(other.str(), bad), InvalidArgument);
  }
}

TEST_CASE("manifest schema versioning and corruption handling") {
  tacsim::testing::TempDir tmp("manifest");

  SUBCASE("future schema versions are refused") {
    write_text_file(tmp.file("manifest.json"),
                    "{\n  \"schema_version\": 99,\n  \"entries\": []\n}\n");
    CHECK_THROWS_AS(load_manifest(tmp.file("manifest.json")),
                    UnsupportedVersion);
  }
  SUBCASE("malformed json is reported as corruption") {
    write_text_file(tmp.file("manifest.json"), "{ not json");
    CHECK_THROWS_AS(load_manifest(tmp.file("manifest.json")), CorruptionError);
  }
  SUBCASE("upsert keeps entries sorted and replaces by id") {
    Manifest manifest;
    manifest.upsert({"b", kKindModel, "b.json", "x", 1, ""});
    manifest.upsert({"a", kKindReport, "a.json", "y", 2, ""});
    manifest.upsert({"c", kKindPairs, "c.csv", "z", 3, ""});
    REQUIRE(manifest.entries.size() == 3);
    CHECK(manifest.entries[0].id == "a");
    CHECK(manifest.entries[1].id == "b");
    CHECK(manifest.entries[2].id == "c");
    manifest.upsert({"b", kKindModel, "b2.json", "w", 4, ""});
    REQUIRE(manifest.entries.size() == 3);
    CHECK(manifest.entries[1].path == "b2.json");
    CHECK(manifest.find_id("a")->kind == kKindReport);
    CHECK(manifest.find_id("zz") == nullptr);
    CHECK(manifest.find_kind(kKindPairs)->id == "c");

    save_manifest(manifest, tmp.file("m.json"));
    const Manifest loaded = load_manifest(tmp.file("m.json"));
    save_manifest(loaded, tmp.file("m2.json"));
    CHECK(read_text_file(tmp.file("m.json")) ==
          read_text_file(tmp.file("m2.json")));
  }
}

TEST_CASE("artifact registration, verification and relocation") {
  tacsim::testing::TempDir tmp("arts");
  write_text_file(tmp.file("model.json"), "{\"layers\": []}\n");
  register_artifact(tmp.str(), {"model", kKindModel, "model.json", "", 5, ""});

  const ManifestEntry entry = require_artifact(tmp.str(), kKindModel);
  CHECK(entry.id == "model");
  CHECK(entry.digest == digest_hex(digest_file(tmp.file("model.json"))));
  CHECK(entry.seed == 5);

  SUBCASE("missing kinds raise the documented message") {
    try {
      require_artifact(tmp.str(), kKindPairs);
      FAIL("expected MissingArtifact");
    } catch (const MissingArtifact& ex) {
      CHECK(std::string(ex.what()) == "missing artifact: pairs");
      CHECK(ex.kind == kKindPairs);
    }
    tacsim::testing::TempDir fresh("empty");
    CHECK_THROWS_AS(require_artifact(fresh.str(), kKindModel),
                    MissingArtifact);
  }
  SUBCASE("verification fails after tampering") {
    write_text_file(tmp.file("model.json"), "{\"layers\": [1]}\n");
    CHECK_THROWS_AS(require_artifact(tmp.str(), kKindModel), CorruptionError);
  }
  SUBCASE("deleting the file is corruption, not absence") {
    fs::remove(tmp.file("model.json"));
    CHECK_THROWS_AS(require_artifact(tmp.str(), kKindModel), CorruptionError);
  }
  SUBCASE("relative paths survive directory relocation") {
    const fs::path moved = tmp.path().parent_path() / "arts-moved";
    fs::rename(tmp.path(), moved);
    const ManifestEntry after =
        require_artifact(moved.string(), kKindModel);
    CHECK(after.digest == entry.digest);
    fs::rename(moved, tmp.path());  // so the TempDir cleanup finds it
  }
}

TEST_CASE("trace and pair csvs round-trip") {
  tacsim::testing::TempDir tmp("csv");
  const TaxelTrace trace = sample_trace();
  write_taxel_trace_csv(tmp.file("taxels.csv"), trace);
  const TaxelTrace trace_back = read_taxel_trace_csv(tmp.file("taxels.csv"));
  CHECK(trace_back.rate_hz == trace.rate_hz);
  CHECK(trace_back.samples == trace.samples);

  ForceTrace force;
  force.rate_hz = 55.0;
  force.samples = {0.0, 0.125, 0.5, 1.75};
  write_force_trace_csv(tmp.file("force.csv"), force);
  const ForceTrace force_back = read_force_trace_csv(tmp.file("force.csv"));
  CHECK(force_back.rate_hz == force.rate_hz);
  CHECK(force_back.samples == force.samples);

  PairSet pairs;
  for (int t = 0; t < 3; ++t) {
    pairs.times.push_back(t / 30.0);
    std::array<double, 8> in{}, out{};
    in[0] = 12345.625 * t;
    out[3] = -0.25 * t;
    pairs.inputs.push_back(in);
    pairs.targets.push_back(out);
  }
  write_pairs_csv(tmp.file("pairs.csv"), pairs);
  const PairSet pairs_back = read_pairs_csv(tmp.file("pairs.csv"));
  CHECK(pairs_back.times == pairs.times);
  CHECK(pairs_back.inputs == pairs.inputs);
  CHECK(pairs_back.targets == pairs.targets);

  SUBCASE("trial-directory forms register their artifacts") {
    tacsim::testing::TempDir trial("trial");
    CHECK_THROWS_AS(read_taxel_trace(trial.str()), MissingArtifact);
    write_taxel_trace(trial.str(), trace, 11, "oracle");
    write_force_trace(trial.str(), force, 12, "oracle");
    write_pairs(trial.str(), pairs, 13, "align");
    CHECK(read_taxel_trace(trial.str()).samples == trace.samples);
    CHECK(read_force_trace(trial.str()).samples == force.samples);
    CHECK(read_pairs(trial.str()).times == pairs.times);
  }
}

TEST_CASE("splits are seeded, disjoint and size-exact") {
  SplitSpec spec;
  spec.seed = 3;
  spec.train_fraction = 0.5;
  spec.val_fraction = 0.0;
  spec.test_fraction = 0.5;
  const SplitResult split = split_indices(40, spec);
  CHECK(split.train.size() == 20);
  CHECK(split.val.empty());
  CHECK(split.test.size() == 20);

  std::set<std::size_t> seen(split.train.begin(), split.train.end());
  seen.insert(split.test.begin(), split.test.end());
  CHECK(seen.size() == 40);
  CHECK(*seen.rbegin() == 39);

  const SplitResult again = split_indices(40, spec);
  CHECK(again.train == split.train);
  CHECK(again.test == split.test);

  SplitSpec other = spec;
  other.seed = 4;
  CHECK(split_indices(40, other).train != split.train);

  SUBCASE("invalid specs are rejected") {
    SplitSpec bad = spec;
    bad.train_fraction = 0.7;  // sums to 1.2
    CHECK_THROWS_AS(split_indices(40, bad), ConfigError);
    bad.train_fraction = -0.1;
    bad.test_fraction = 1.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(split_indices(0, spec), ConfigError);
    SplitSpec starved;
    starved.seed = 1;  // default 0.8/0.1/0.1 cannot fill three buckets from 2
    CHECK_THROWS_AS(split_indices(2, starved), ConfigError);
  }
  SUBCASE("grouped splits keep whole trials together") {
    std::vector<std::size_t> item_trial;
    for (std::size_t trial = 0; trial < 4; ++trial)
      for (int k = 0; k < 3; ++k) item_trial.push_back(trial);
    const SplitResult grouped = split_grouped(item_trial, spec);
    CHECK(grouped.train.size() + grouped.test.size() == 12);
    CHECK(grouped.train.size() % 3 == 0);
    for (const auto* part : {&grouped.train, &grouped.val, &grouped.test}) {
      std::set<std::size_t> trials;
      for (std::size_t item : *part) trials.insert(item_trial[item]);
      for (std::size_t item : *part)
        CHECK(trials.count(item_trial[item]) == 1);
      // every item of a selected trial lands in this partition
      for (std::size_t trial : trials) {
        std::size_t members = 0;
        for (std::size_t item : *part)
          if (item_trial[item] == trial) ++members;
        CHECK(members == 3);
      }
    }
    SplitSpec frames = spec;
    frames.granularity = SplitGranularity::kFrame;
    const SplitResult ungrouped = split_grouped(item_trial, frames);
    CHECK(ungrouped.train.size() == 6);
    CHECK(ungrouped.test.size() == 6);
  }
}

}  // TEST_SUITE
