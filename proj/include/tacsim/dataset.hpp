#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tacsim/features.hpp"
#include "tacsim/scenario.hpp"
#include "tacsim/sensor_oracle.hpp"

namespace tacsim {

// ---------------------------------------------------------------------------
// Digests and byte-level helpers
// ---------------------------------------------------------------------------

/// 64-bit FNV-1a over a byte range. Used for corruption detection only;
/// offset basis 14695981039346656037, prime 1099511628211.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64(const std::string& bytes);

/// FNV-1a of a file's contents. Throws IoError when unreadable.
std::uint64_t digest_file(const std::string& path);

/// 16 lowercase hex digits.
std::string digest_hex(std::uint64_t digest);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::vector<unsigned char> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path,
                       const std::vector<unsigned char>& bytes);

/// Standard base64 (RFC 4648 alphabet, '=' padding, no line breaks).
std::string base64_encode(const void* data, std::size_t size);
std::vector<unsigned char> base64_decode(const std::string& text);

/// Round-trip-safe decimal formatting (17 significant digits) used by every
/// text artifact so write -> read -> write is byte-stable.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

inline constexpr int kManifestSchemaVersion = 1;

// Artifact kinds recorded in manifests.
inline constexpr const char* kKindSimRecording = "sim_recording";
inline constexpr const char* kKindTaxelTrace = "taxel_trace";
inline constexpr const char* kKindForceTrace = "force_trace";
inline constexpr const char* kKindPairs = "pairs";
inline constexpr const char* kKindModel = "model";
inline constexpr const char* kKindReport = "report";

struct ManifestEntry {
  std::string id;
  std::string kind;
  std::string path;  // relative to the manifest's directory
  std::string digest;
  std::uint64_t seed = 0;
  std::string note;
};

/// Inventory of one artifact directory. Entries are kept sorted by id so
/// serialization is canonical.
struct Manifest {
  int schema_version = kManifestSchemaVersion;
  std::vector<ManifestEntry> entries;

  const ManifestEntry* find_id(const std::string& id) const;
  const ManifestEntry* find_kind(const std::string& kind) const;
  /// Inserts or replaces the entry with the same id.
  void upsert(ManifestEntry entry);
};

void save_manifest(const Manifest& manifest, const std::string& path);

/// Parses a manifest without touching the referenced files. Unknown
/// schema_version -> UnsupportedVersion.
Manifest load_manifest(const std::string& path);

/// Recomputes the digest of every referenced file; mismatch or missing file
/// -> CorruptionError naming the entry.
void verify_manifest(const Manifest& manifest, const std::string& dir);

/// Computes the digest of dir/<entry.path> and upserts the entry into
/// dir/manifest.json (creating the manifest when absent).
void register_artifact(const std::string& dir, ManifestEntry entry);

/// Loads dir/manifest.json, verifies every digest, and returns the entry of
/// the requested kind. Missing manifest or missing kind -> MissingArtifact.
ManifestEntry require_artifact(const std::string& dir,
                               const std::string& kind);

// ---------------------------------------------------------------------------
// Recordings (frames.bin + force_sim.csv in one trial directory)
// ---------------------------------------------------------------------------

/// Writes dir/frames.bin (binary frame data including times, contact track
/// and force trace), dir/force_sim.csv, and registers both in
/// dir/manifest.json. Creates dir as needed.
void write_recording(const std::string& dir, const SimRecording& recording);

/// Digest-verified load of a trial directory written by write_recording.
SimRecording read_recording(const std::string& dir);

// ---------------------------------------------------------------------------
// Traces and pairs (CSV with a `# rate_hz <r>` header comment)
// ---------------------------------------------------------------------------

void write_taxel_trace_csv(const std::string& path, const TaxelTrace& trace);
TaxelTrace read_taxel_trace_csv(const std::string& path);

void write_force_trace_csv(const std::string& path, const ForceTrace& trace);
ForceTrace read_force_trace_csv(const std::string& path);

void write_pairs_csv(const std::string& path, const PairSet& pairs);
PairSet read_pairs_csv(const std::string& path);

/// Trial-directory forms: write the CSV under its standard name, register
/// it in dir/manifest.json; reads are digest-verified and throw
/// MissingArtifact when the stage has not run.
void write_taxel_trace(const std::string& dir, const TaxelTrace& trace,
                       std::uint64_t seed, const std::string& note);
TaxelTrace read_taxel_trace(const std::string& dir);
void write_force_trace(const std::string& dir, const ForceTrace& trace,
                       std::uint64_t seed, const std::string& note);
ForceTrace read_force_trace(const std::string& dir);
void write_pairs(const std::string& dir, const PairSet& pairs,
                 std::uint64_t seed, const std::string& note);
PairSet read_pairs(const std::string& dir);

// ---------------------------------------------------------------------------
// Batch manifest (dataset root)
// ---------------------------------------------------------------------------

/// Records the outcome of a batch run in out_dir/manifest.json: one
/// sim_recording entry per trial directory (digest of its frames.bin) and
/// the failure notes.
void write_batch_manifest(const std::string& out_dir,
                          const BatchOutcome& outcome);

/// Trial ids listed in a batch manifest, sorted; digests are not verified
/// here (per-trial reads do that).
std::vector<std::string> read_batch_ids(const std::string& out_dir);

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

enum class SplitGranularity { kFrame, kTrial };

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  SplitGranularity granularity = SplitGranularity::kTrial;

  void validate() const;
};

struct SplitResult {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded shuffle of 0..count-1 followed by a contiguous partition at the
/// fraction boundaries. Every nonzero fraction must receive at least one
/// item, else ConfigError.
SplitResult split_indices(std::size_t count, const SplitSpec& spec);

/// Split for items grouped into trials (item_trial[i] = trial of item i).
/// Trials are split as units; the returned sets hold item indices. With
/// kFrame granularity this ignores the grouping.
SplitResult split_grouped(const std::vector<std::size_t>& item_trial,
                          const SplitSpec& spec);

}  // namespace tacsim
