#include "tacsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tacsim/errors.hpp"
#include "tacsim/rng.hpp"

namespace tacsim {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Digests and byte-level helpers
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 14695981039346656037ULL;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  return fnv1a64(bytes.data(), bytes.size());
}

std::uint64_t digest_file(const std::string& path) {
  const auto bytes = read_binary_file(path);
  return fnv1a64(bytes.data(), bytes.size());
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(digest));
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed on " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out.good()) throw IoError("write failed on " + path);
}

std::vector<unsigned char> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::vector<unsigned char> bytes(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path);
  return bytes;
}

void write_binary_file(const std::string& path,
                       const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out.good()) throw IoError("write failed on " + path);
}

namespace {
constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}  // namespace

std::string base64_encode(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::string out;
  out.reserve((size + 2) / 3 * 4);
  for (std::size_t i = 0; i < size; i += 3) {
    const unsigned b0 = bytes[i];
    const unsigned b1 = i + 1 < size ? bytes[i + 1] : 0;
    const unsigned b2 = i + 2 < size ? bytes[i + 2] : 0;
    out.push_back(kBase64Alphabet[b0 >> 2]);
    out.push_back(kBase64Alphabet[((b0 & 0x3u) << 4) | (b1 >> 4)]);
    out.push_back(i + 1 < size ? kBase64Alphabet[((b1 & 0xfu) << 2) | (b2 >> 6)]
                               : '=');
    out.push_back(i + 2 < size ? kBase64Alphabet[b2 & 0x3fu] : '=');
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0)
    throw CorruptionError("base64 payload length is not a multiple of 4");
  static const auto value_of = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2)
          throw CorruptionError("misplaced base64 padding");
        v[k] = 0;
        ++pad;
      } else {
        if (pad > 0) throw CorruptionError("data after base64 padding");
        v[k] = value_of(c);
        if (v[k] < 0) throw CorruptionError("invalid base64 character");
      }
    }
    out.push_back(static_cast<unsigned char>((v[0] << 2) | (v[1] >> 4)));
    if (pad < 2)
      out.push_back(static_cast<unsigned char>(((v[1] & 0xf) << 4) | (v[2] >> 2)));
    if (pad < 1)
      out.push_back(static_cast<unsigned char>(((v[2] & 0x3) << 6) | v[3]));
  }
  return out;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

// ---------------------------------------------------------------------------
// Binary scalar packing (explicit little-endian layout)
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k)
    out.push_back(static_cast<unsigned char>((v >> (8 * k)) & 0xffu));
}

void put_f64(std::vector<unsigned char>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  for (int k = 0; k < 8; ++k)
    out.push_back(static_cast<unsigned char>((bits >> (8 * k)) & 0xffu));
}

struct ByteReader {
  const std::vector<unsigned char>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size())
      throw CorruptionError("binary artifact truncated");
  }
  std::uint32_t get_u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k)
      v |= static_cast<std::uint32_t>(bytes[pos + k]) << (8 * k);
    pos += 4;
    return v;
  }
  double get_f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k)
      bits |= static_cast<std::uint64_t>(bytes[pos + k]) << (8 * k);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
};

constexpr char kFramesMagic[4] = {'T', 'S', 'F', '1'};

}  // namespace

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

const ManifestEntry* Manifest::find_id(const std::string& id) const {
  for (const auto& e : entries)
    if (e.id == id) return &e;
  return nullptr;
}

const ManifestEntry* Manifest::find_kind(const std::string& kind) const {
  for (const auto& e : entries)
    if (e.kind == kind) return &e;
  return nullptr;
}

void Manifest::upsert(ManifestEntry entry) {
  const auto at = std::lower_bound(
      entries.begin(), entries.end(), entry,
      [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  if (at != entries.end() && at->id == entry.id)
    *at = std::move(entry);
  else
    entries.insert(at, std::move(entry));
}

void save_manifest(const Manifest& manifest, const std::string& path) {
  json doc;
  doc["schema_version"] = manifest.schema_version;
  doc["entries"] = json::array();
  for (const auto& e : manifest.entries) {
    json je;
    je["id"] = e.id;
    je["kind"] = e.kind;
    je["path"] = e.path;
    je["digest"] = e.digest;
    je["seed"] = e.seed;
    je["note"] = e.note;
    doc["entries"].push_back(je);
  }
  write_text_file(path, doc.dump(2) + "\n");
}

Manifest load_manifest(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& ex) {
    throw CorruptionError("malformed manifest " + path + ": " + ex.what());
  }
  Manifest manifest;
  try {
    manifest.schema_version = doc.at("schema_version").get<int>();
    if (manifest.schema_version != kManifestSchemaVersion)
      throw UnsupportedVersion(
          "manifest schema_version " + std::to_string(manifest.schema_version) +
          " is not supported (expected " +
          std::to_string(kManifestSchemaVersion) + ")");
    for (const auto& je : doc.at("entries")) {
      ManifestEntry e;
      e.id = je.at("id").get<std::string>();
      e.kind = je.at("kind").get<std::string>();
      e.path = je.at("path").get<std::string>();
      e.digest = je.at("digest").get<std::string>();
      e.seed = je.at("seed").get<std::uint64_t>();
      e.note = je.at("note").get<std::string>();
      manifest.entries.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw CorruptionError("malformed manifest " + path + ": " + ex.what());
  }
  for (std::size_t i = 0; i + 1 < manifest.entries.size(); ++i)
    if (manifest.entries[i].id == manifest.entries[i + 1].id)
      throw CorruptionError("duplicate manifest id " + manifest.entries[i].id);
  return manifest;
}

void verify_manifest(const Manifest& manifest, const std::string& dir) {
  for (const auto& e : manifest.entries) {
    std::uint64_t actual;
    try {
      actual = digest_file(dir + "/" + e.path);
    } catch (const IoError&) {
      throw CorruptionError("manifest entry " + e.id + " points to missing file " +
                            e.path);
    }
    if (digest_hex(actual) != e.digest)
      throw CorruptionError("digest mismatch for " + e.path + " (entry " +
                            e.id + ")");
  }
}

void register_artifact(const std::string& dir, ManifestEntry entry) {
  entry.digest = digest_hex(digest_file(dir + "/" + entry.path));
  const std::string mpath = dir + "/manifest.json";
  Manifest manifest;
  if (fs::exists(mpath)) manifest = load_manifest(mpath);
  manifest.upsert(std::move(entry));
  save_manifest(manifest, mpath);
}

ManifestEntry require_artifact(const std::string& dir,
                               const std::string& kind) {
  const std::string mpath = dir + "/manifest.json";
  if (!fs::exists(mpath)) throw MissingArtifact(kind);
  const Manifest manifest = load_manifest(mpath);
  verify_manifest(manifest, dir);
  const ManifestEntry* entry = manifest.find_kind(kind);
  if (entry == nullptr) throw MissingArtifact(kind);
  return *entry;
}

// ---------------------------------------------------------------------------
// Recordings
// ---------------------------------------------------------------------------

void write_recording(const std::string& dir, const SimRecording& recording) {
  const std::size_t n = recording.frame_count();
  if (recording.times.size() != n || recording.force_trace.size() != n ||
      recording.contact_xy.size() != n)
    throw InvalidArgument("recording arrays have inconsistent lengths");
  const std::size_t tets = recording.tet_count();
  for (const auto& frame : recording.frames)
    if (frame.size() != tets)
      throw InvalidArgument("recording frames have inconsistent row counts");

  fs::create_directories(dir);

  std::vector<unsigned char> bin;
  bin.reserve(16 + n * (32 + tets * 32));
  bin.insert(bin.end(), kFramesMagic, kFramesMagic + 4);
  put_u32(bin, static_cast<std::uint32_t>(n));
  put_u32(bin, static_cast<std::uint32_t>(tets));
  put_f64(bin, recording.frame_rate);
  for (std::size_t t = 0; t < n; ++t) {
    put_f64(bin, recording.times[t]);
    put_f64(bin, recording.contact_xy[t][0]);
    put_f64(bin, recording.contact_xy[t][1]);
    put_f64(bin, recording.force_trace[t]);
    for (const StressRow& row : recording.frames[t])
      for (double v : row) put_f64(bin, v);
  }
  write_binary_file(dir + "/frames.bin", bin);

  std::ostringstream csv;
  csv << "# rate_hz " << format_double(recording.frame_rate) << "\n";
  csv << "t,fz\n";
  for (std::size_t t = 0; t < n; ++t)
    csv << format_double(recording.times[t]) << ','
        << format_double(recording.force_trace[t]) << "\n";
  write_text_file(dir + "/force_sim.csv", csv.str());

  ManifestEntry rec_entry;
  rec_entry.id = recording.meta.id.empty() ? "recording" : recording.meta.id;
  rec_entry.kind = kKindSimRecording;
  rec_entry.path = "frames.bin";
  rec_entry.seed = recording.meta.seed;
  rec_entry.note = recording.meta.note;
  register_artifact(dir, rec_entry);

  ManifestEntry force_entry;
  force_entry.id = "force_sim";
  force_entry.kind = kKindForceTrace;
  force_entry.path = "force_sim.csv";
  force_entry.seed = recording.meta.seed;
  force_entry.note = "axial contact force on the simulation timeline";
  register_artifact(dir, force_entry);
}

SimRecording read_recording(const std::string& dir) {
  const ManifestEntry entry = require_artifact(dir, kKindSimRecording);
  const auto bytes = read_binary_file(dir + "/" + entry.path);

  ByteReader reader{bytes};
  reader.need(4);
  if (std::memcmp(bytes.data(), kFramesMagic, 3) != 0)
    throw CorruptionError("frames file has wrong magic");
  if (bytes[3] != static_cast<unsigned char>(kFramesMagic[3]))
    throw UnsupportedVersion("frames file version not supported");
  reader.pos = 4;

  SimRecording rec;
  const std::uint32_t n = reader.get_u32();
  const std::uint32_t tets = reader.get_u32();
  rec.frame_rate = reader.get_f64();
  rec.times.resize(n);
  rec.contact_xy.resize(n);
  rec.force_trace.resize(n);
  rec.frames.assign(n, StressFrameData(tets));
  for (std::uint32_t t = 0; t < n; ++t) {
    rec.times[t] = reader.get_f64();
    rec.contact_xy[t][0] = reader.get_f64();
    rec.contact_xy[t][1] = reader.get_f64();
    rec.force_trace[t] = reader.get_f64();
    for (std::uint32_t k = 0; k < tets; ++k)
      for (double& v : rec.frames[t][k]) v = reader.get_f64();
  }
  if (reader.pos != bytes.size())
    throw CorruptionError("frames file has trailing bytes");
  rec.meta.id = entry.id;
  rec.meta.seed = entry.seed;
  rec.meta.note = entry.note;
  return rec;
}

// ---------------------------------------------------------------------------
// CSV traces and pairs
// ---------------------------------------------------------------------------

namespace {

// Parses "# rate_hz <r>" + header + numeric rows with a fixed column count.
std::vector<std::vector<double>> read_csv_table(const std::string& path,
                                                const std::string& expect_header,
                                                std::size_t columns,
                                                double* rate_hz) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;

  if (rate_hz != nullptr) {
    if (!std::getline(in, line) || line.rfind("# rate_hz ", 0) != 0)
      throw CorruptionError(path + ": missing '# rate_hz' header");
    try {
      *rate_hz = std::stod(line.substr(10));
    } catch (const std::exception&) {
      throw CorruptionError(path + ": unparsable rate");
    }
  }
  if (!std::getline(in, line) || line != expect_header)
    throw CorruptionError(path + ": expected header '" + expect_header + "'");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(columns);
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      try {
        row.push_back(std::stod(line.substr(start, comma - start)));
      } catch (const std::exception&) {
        throw CorruptionError(path + ": unparsable number in row " +
                              std::to_string(rows.size()));
      }
      start = comma + 1;
    }
    if (row.size() != columns)
      throw CorruptionError(path + ": row " + std::to_string(rows.size()) +
                            " has " + std::to_string(row.size()) +
                            " columns, expected " + std::to_string(columns));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_taxel_trace_csv(const std::string& path, const TaxelTrace& trace) {
  if (!(trace.rate_hz > 0.0)) throw InvalidArgument("trace rate must be positive");
  std::ostringstream csv;
  csv << "# rate_hz " << format_double(trace.rate_hz) << "\n";
  csv << "t,s1,s2,s3,s4,s5,s6,s7,s8\n";
  for (std::size_t k = 0; k < trace.samples.size(); ++k) {
    csv << format_double(static_cast<double>(k) / trace.rate_hz);
    for (double v : trace.samples[k]) csv << ',' << format_double(v);
    csv << "\n";
  }
  write_text_file(path, csv.str());
}

TaxelTrace read_taxel_trace_csv(const std::string& path) {
  TaxelTrace trace;
  const auto rows = read_csv_table(path, "t,s1,s2,s3,s4,s5,s6,s7,s8", 9,
                                   &trace.rate_hz);
  trace.samples.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t i = 0; i < 8; ++i)
      trace.samples[k][i] = rows[k][i + 1];
  return trace;
}

void write_force_trace_csv(const std::string& path, const ForceTrace& trace) {
  if (!(trace.rate_hz > 0.0)) throw InvalidArgument("trace rate must be positive");
  std::ostringstream csv;
  csv << "# rate_hz " << format_double(trace.rate_hz) << "\n";
  csv << "t,fz\n";
  for (std::size_t k = 0; k < trace.samples.size(); ++k)
    csv << format_double(static_cast<double>(k) / trace.rate_hz) << ','
        << format_double(trace.samples[k]) << "\n";
  write_text_file(path, csv.str());
}

ForceTrace read_force_trace_csv(const std::string& path) {
  ForceTrace trace;
  const auto rows = read_csv_table(path, "t,fz", 2, &trace.rate_hz);
  trace.samples.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) trace.samples[k] = rows[k][1];
  return trace;
}

void write_pairs_csv(const std::string& path, const PairSet& pairs) {
  if (pairs.inputs.size() != pairs.times.size() ||
      pairs.targets.size() != pairs.times.size())
    throw InvalidArgument("pair arrays have inconsistent lengths");
  std::ostringstream csv;
  csv << "t,f1,f2,f3,f4,f5,f6,f7,f8,s1,s2,s3,s4,s5,s6,s7,s8\n";
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    csv << format_double(pairs.times[k]);
    for (double v : pairs.inputs[k]) csv << ',' << format_double(v);
    for (double v : pairs.targets[k]) csv << ',' << format_double(v);
    csv << "\n";
  }
  write_text_file(path, csv.str());
}

PairSet read_pairs_csv(const std::string& path) {
  const auto rows = read_csv_table(
      path, "t,f1,f2,f3,f4,f5,f6,f7,f8,s1,s2,s3,s4,s5,s6,s7,s8", 17, nullptr);
  PairSet pairs;
  pairs.times.resize(rows.size());
  pairs.inputs.resize(rows.size());
  pairs.targets.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    pairs.times[k] = rows[k][0];
    for (std::size_t i = 0; i < 8; ++i) {
      pairs.inputs[k][i] = rows[k][1 + i];
      pairs.targets[k][i] = rows[k][9 + i];
    }
  }
  return pairs;
}

void write_taxel_trace(const std::string& dir, const TaxelTrace& trace,
                       std::uint64_t seed, const std::string& note) {
  fs::create_directories(dir);
  write_taxel_trace_csv(dir + "/taxels.csv", trace);
  ManifestEntry entry;
  entry.id = "taxels";
  entry.kind = kKindTaxelTrace;
  entry.path = "taxels.csv";
  entry.seed = seed;
  entry.note = note;
  register_artifact(dir, entry);
}

TaxelTrace read_taxel_trace(const std::string& dir) {
  const ManifestEntry entry = require_artifact(dir, kKindTaxelTrace);
  return read_taxel_trace_csv(dir + "/" + entry.path);
}

void write_force_trace(const std::string& dir, const ForceTrace& trace,
                       std::uint64_t seed, const std::string& note) {
  fs::create_directories(dir);
  write_force_trace_csv(dir + "/force_real.csv", trace);
  ManifestEntry entry;
  entry.id = "force_real";
  entry.kind = "force_trace_real";
  entry.path = "force_real.csv";
  entry.seed = seed;
  entry.note = note;
  register_artifact(dir, entry);
}

ForceTrace read_force_trace(const std::string& dir) {
  const ManifestEntry entry = require_artifact(dir, "force_trace_real");
  return read_force_trace_csv(dir + "/" + entry.path);
}

void write_pairs(const std::string& dir, const PairSet& pairs,
                 std::uint64_t seed, const std::string& note) {
  fs::create_directories(dir);
  write_pairs_csv(dir + "/pairs.csv", pairs);
  ManifestEntry entry;
  entry.id = "pairs";
  entry.kind = kKindPairs;
  entry.path = "pairs.csv";
  entry.seed = seed;
  entry.note = note;
  register_artifact(dir, entry);
}

PairSet read_pairs(const std::string& dir) {
  const ManifestEntry entry = require_artifact(dir, kKindPairs);
  return read_pairs_csv(dir + "/" + entry.path);
}

// ---------------------------------------------------------------------------
// Batch manifest
// ---------------------------------------------------------------------------

void write_batch_manifest(const std::string& out_dir,
                          const BatchOutcome& outcome) {
  fs::create_directories(out_dir);
  Manifest manifest;
  const std::string mpath = out_dir + "/manifest.json";
  if (fs::exists(mpath)) manifest = load_manifest(mpath);

  std::vector<std::string> ids = outcome.recorded_ids;
  std::sort(ids.begin(), ids.end());
  for (const std::string& id : ids) {
    const Manifest trial = load_manifest(out_dir + "/" + id + "/manifest.json");
    const ManifestEntry* rec = trial.find_kind(kKindSimRecording);
    if (rec == nullptr)
      throw CorruptionError("trial " + id + " has no recording entry");
    ManifestEntry entry = *rec;
    entry.id = id;
    entry.path = id + "/" + rec->path;
    manifest.upsert(std::move(entry));
  }

  json report;
  report["recorded"] = ids;
  report["failures"] = json::array();
  std::vector<std::pair<std::string, std::string>> failures = outcome.failures;
  std::sort(failures.begin(), failures.end());
  for (const auto& [id, message] : failures)
    report["failures"].push_back({{"id", id}, {"message", message}});
  fs::create_directories(out_dir + "/reports");
  write_text_file(out_dir + "/reports/batch.json", report.dump(2) + "\n");

  save_manifest(manifest, mpath);
  ManifestEntry report_entry;
  report_entry.id = "batch_report";
  report_entry.kind = kKindReport;
  report_entry.path = "reports/batch.json";
  report_entry.note = "batch outcome summary";
  register_artifact(out_dir, report_entry);
}

std::vector<std::string> read_batch_ids(const std::string& out_dir) {
  const Manifest manifest = load_manifest(out_dir + "/manifest.json");
  std::vector<std::string> ids;
  for (const auto& e : manifest.entries)
    if (e.kind == kKindSimRecording) ids.push_back(e.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

void SplitSpec::validate() const {
  if (train_fraction < 0.0 || val_fraction < 0.0 || test_fraction < 0.0)
    throw ConfigError("split fractions must be nonnegative");
  const double sum = train_fraction + val_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
}

SplitResult split_indices(std::size_t count, const SplitSpec& spec) {
  spec.validate();
  if (count == 0) throw ConfigError("cannot split an empty item set");

  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(order);

  const auto n = static_cast<double>(count);
  auto boundary = [count, n](double fraction) {
    const auto b = static_cast<std::size_t>(std::llround(n * fraction));
    return std::min(b, count);
  };
  const std::size_t b1 = boundary(spec.train_fraction);
  const std::size_t b2 =
      std::max(b1, boundary(spec.train_fraction + spec.val_fraction));

  SplitResult result;
  result.train.assign(order.begin(), order.begin() + static_cast<long>(b1));
  result.val.assign(order.begin() + static_cast<long>(b1),
                    order.begin() + static_cast<long>(b2));
  result.test.assign(order.begin() + static_cast<long>(b2), order.end());

  if ((spec.train_fraction > 0.0 && result.train.empty()) ||
      (spec.val_fraction > 0.0 && result.val.empty()) ||
      (spec.test_fraction > 0.0 && result.test.empty()))
    throw ConfigError("too few items for the requested split fractions");
  return result;
}

SplitResult split_grouped(const std::vector<std::size_t>& item_trial,
                          const SplitSpec& spec) {
  if (spec.granularity == SplitGranularity::kFrame)
    return split_indices(item_trial.size(), spec);
  if (item_trial.empty()) throw ConfigError("cannot split an empty item set");

  std::vector<std::size_t> trials = item_trial;
  std::sort(trials.begin(), trials.end());
  trials.erase(std::unique(trials.begin(), trials.end()), trials.end());

  const SplitResult trial_split = split_indices(trials.size(), spec);
  // 0 = train, 1 = val, 2 = test per distinct trial.
  std::vector<int> bucket_of(trials.size(), 0);
  for (std::size_t t : trial_split.val) bucket_of[t] = 1;
  for (std::size_t t : trial_split.test) bucket_of[t] = 2;

  SplitResult result;
  for (std::size_t i = 0; i < item_trial.size(); ++i) {
    const auto at =
        std::lower_bound(trials.begin(), trials.end(), item_trial[i]);
    const auto trial_index = static_cast<std::size_t>(at - trials.begin());
    switch (bucket_of[trial_index]) {
      case 0: result.train.push_back(i); break;
      case 1: result.val.push_back(i); break;
      default: result.test.push_back(i); break;
    }
  }
  return result;
}

}  // namespace tacsim
