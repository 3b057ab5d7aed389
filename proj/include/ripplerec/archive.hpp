#pragma once

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

#include "ripplerec/coldstart.hpp"
#include "ripplerec/kg.hpp"
#include "ripplerec/model.hpp"
#include "ripplerec/ripple.hpp"

namespace ripplerec {

inline constexpr int kArchiveFormatVersion = 1;

// Everything needed to serve: vocabularies, trained parameters, the profile
// store, the similarity index and (optionally) the trained encoder.
struct ModelArtifacts {
  nlohmann::json config_snapshot;  // flat key-value document used for the run
  std::string train_date;          // YYYY-MM-DD, empty for split-based training
  Vocab entities;
  Vocab relations;
  ModelParameters params;
  ProfileStore profiles;
  SimilarityIndex simindex;
  std::optional<EncoderParams> encoder;
};

// Directory layout: manifest.json, entities.tsv, relations.tsv, E.bin,
// R.bin, profiles.bin, simindex.bin, encoder.bin (optional). Blobs are
// little-endian float32 with explicit shape headers; the manifest records a
// sha256 per file plus a combined content hash. Saving the same artifacts
// twice produces identical bytes.
void save_archive(const ModelArtifacts& artifacts, const std::filesystem::path& dir);

// `path` may be an archive directory or a serving directory containing a
// CURRENT pointer file. Load verifies per-file hashes (CorruptionError) and
// the format version (VersionError).
ModelArtifacts load_archive(const std::filesystem::path& path);

// Content hash of a saved archive (from its manifest).
std::string archive_content_hash(const std::filesystem::path& dir);

// Bare parameter blobs (E.bin + R.bin) for intermediate pipeline stages.
void save_model_params(const ModelParameters& params, const std::filesystem::path& dir);
ModelParameters load_model_params(const std::filesystem::path& dir);

// Resolve a serving directory's CURRENT pointer, if present.
std::filesystem::path resolve_archive_dir(const std::filesystem::path& path);

// Atomic deploy: copy `archive_dir` into the serving directory under a
// content-addressed name via a hidden staging dir + rename, then swap the
// CURRENT pointer (write-temp + rename). Readers always observe a complete
// archive. Returns the deployed directory.
std::filesystem::path deploy_archive(const std::filesystem::path& archive_dir,
                                     const std::filesystem::path& serving_dir);

}  // namespace ripplerec
