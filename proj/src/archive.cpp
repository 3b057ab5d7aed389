#include "ripplerec/archive.hpp"

#include <algorithm>

#include "ripplerec/binio.hpp"
#include "ripplerec/hashing.hpp"
#include "ripplerec/text.hpp"

namespace ripplerec {

namespace {

std::string serialize_embeddings(const ModelParameters& params) {
  BinWriter w;
  w.raw("RRE1", 4);
  w.u64(params.n_entities);
  w.u32(static_cast<uint32_t>(params.dim));
  for (float v : params.entity_embeddings) w.f32(v);
  return w.take();
}

std::string serialize_transforms(const ModelParameters& params) {
  BinWriter w;
  w.raw("RRR1", 4);
  w.u64(params.n_relations);
  w.u32(static_cast<uint32_t>(params.dim));
  for (float v : params.relation_transforms) w.f32(v);
  return w.take();
}

std::string serialize_simindex(const SimilarityIndex& index) {
  BinWriter w;
  w.raw("RRSI", 4);
  w.u64(index.entries.size());
  w.u32(static_cast<uint32_t>(index.dim));
  w.u64(index.excluded_zero_norm);
  w.u64(index.excluded_missing_embedding);
  for (const auto& entry : index.entries) {
    w.str(entry.item_id);
    w.u32(static_cast<uint32_t>(entry.entity));
    for (float v : entry.unit_embedding) w.f32(v);
  }
  return w.take();
}

SimilarityIndex deserialize_simindex(std::string_view bytes, std::string_view origin) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "RRSI") {
    throw CorruptionError(std::string(origin) + ": not a similarity index");
  }
  BinReader r(bytes, std::string(origin));
  (void)r.u32();  // magic
  SimilarityIndex index;
  const uint64_t n = r.u64();
  index.dim = r.u32();
  index.excluded_zero_norm = r.u64();
  index.excluded_missing_embedding = r.u64();
  index.entries.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    SimilarityIndex::Entry entry;
    entry.item_id = r.str();
    entry.entity = static_cast<int32_t>(r.u32());
    entry.unit_embedding.resize(index.dim);
    for (auto& v : entry.unit_embedding) v = r.f32();
    index.entries.push_back(std::move(entry));
  }
  r.expect_end();
  return index;
}

std::string serialize_encoder(const EncoderParams& encoder) {
  BinWriter w;
  w.raw("RREN", 4);
  w.u32(static_cast<uint32_t>(encoder.dims.size()));
  for (int d : encoder.dims) w.u32(static_cast<uint32_t>(d));
  for (size_t l = 0; l < encoder.weights.size(); ++l) {
    for (float v : encoder.weights[l]) w.f32(v);
    for (float v : encoder.biases[l]) w.f32(v);
  }
  return w.take();
}

EncoderParams deserialize_encoder(std::string_view bytes, std::string_view origin) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "RREN") {
    throw CorruptionError(std::string(origin) + ": not an encoder blob");
  }
  BinReader r(bytes, std::string(origin));
  (void)r.u32();  // magic
  EncoderParams encoder;
  const uint32_t n_dims = r.u32();
  encoder.dims.resize(n_dims);
  for (auto& d : encoder.dims) d = static_cast<int>(r.u32());
  for (size_t l = 0; l + 1 < encoder.dims.size(); ++l) {
    const size_t in = static_cast<size_t>(encoder.dims[l]);
    const size_t out = static_cast<size_t>(encoder.dims[l + 1]);
    std::vector<float> w(out * in);
    for (auto& v : w) v = r.f32();
    std::vector<float> b(out);
    for (auto& v : b) v = r.f32();
    encoder.weights.push_back(std::move(w));
    encoder.biases.push_back(std::move(b));
  }
  r.expect_end();
  return encoder;
}

std::string vocab_tsv(const Vocab& vocab) {
  std::string out;
  for (size_t i = 0; i < vocab.size(); ++i) {
    out += vocab.name(static_cast<int32_t>(i));
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  return out;
}

Vocab vocab_from_tsv(std::string_view data, std::string_view origin) {
  Vocab vocab;
  size_t line_no = 0;
  for (const auto& line : split(std::string(data), '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto parts = split(line, '\t');
    if (parts.size() != 2 || std::to_string(vocab.add(parts[0])) != parts[1]) {
      throw CorruptionError(std::string(origin) + ":" + std::to_string(line_no) +
                            ": malformed vocabulary row");
    }
  }
  return vocab;
}

}  // namespace

void save_model_params(const ModelParameters& params, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "E.bin", serialize_embeddings(params));
  write_file(dir / "R.bin", serialize_transforms(params));
}

ModelParameters load_model_params(const std::filesystem::path& dir) {
  ModelParameters params;
  {
    const std::string bytes = read_file(dir / "E.bin");
    if (bytes.size() < 4 || bytes.substr(0, 4) != "RRE1") {
      throw CorruptionError(dir.string() + "/E.bin: bad magic");
    }
    BinReader r(bytes, "E.bin");
    (void)r.u32();
    params.n_entities = r.u64();
    params.dim = static_cast<int>(r.u32());
    params.entity_embeddings.resize(params.n_entities * static_cast<size_t>(params.dim));
    for (auto& v : params.entity_embeddings) v = r.f32();
    r.expect_end();
  }
  {
    const std::string bytes = read_file(dir / "R.bin");
    if (bytes.size() < 4 || bytes.substr(0, 4) != "RRR1") {
      throw CorruptionError(dir.string() + "/R.bin: bad magic");
    }
    BinReader r(bytes, "R.bin");
    (void)r.u32();
    params.n_relations = r.u64();
    if (static_cast<int>(r.u32()) != params.dim) {
      throw CorruptionError(dir.string() + ": R.bin dimension disagrees with E.bin");
    }
    params.relation_transforms.resize(params.n_relations * static_cast<size_t>(params.dim) *
                                      params.dim);
    for (auto& v : params.relation_transforms) v = r.f32();
    r.expect_end();
  }
  return params;
}

void save_archive(const ModelArtifacts& artifacts, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("entities.tsv", vocab_tsv(artifacts.entities));
  files.emplace_back("relations.tsv", vocab_tsv(artifacts.relations));
  files.emplace_back("E.bin", serialize_embeddings(artifacts.params));
  files.emplace_back("R.bin", serialize_transforms(artifacts.params));
  files.emplace_back("profiles.bin", serialize_profiles(artifacts.profiles));
  files.emplace_back("simindex.bin", serialize_simindex(artifacts.simindex));
  if (artifacts.encoder) {
    files.emplace_back("encoder.bin", serialize_encoder(*artifacts.encoder));
  }

  nlohmann::json file_hashes;
  Sha256 combined;
  for (const auto& [name, bytes] : files) {
    const std::string digest = sha256_hex(bytes);
    file_hashes[name] = digest;
    combined.update(name);
    combined.update(digest);
    write_file(dir / name, bytes);
  }

  nlohmann::json manifest;
  manifest["format_version"] = kArchiveFormatVersion;
  manifest["config"] = artifacts.config_snapshot;
  manifest["train_date"] = artifacts.train_date;
  manifest["dim"] = artifacts.params.dim;
  manifest["n_entities"] = artifacts.params.n_entities;
  manifest["n_relations"] = artifacts.params.n_relations;
  manifest["n_profiles"] = artifacts.profiles.profiles.size();
  manifest["files"] = file_hashes;
  manifest["content_hash"] = to_hex(combined.finish());
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::filesystem::path resolve_archive_dir(const std::filesystem::path& path) {
  const auto current = path / "CURRENT";
  if (std::filesystem::exists(current)) {
    std::string target = read_file(current);
    while (!target.empty() && (target.back() == '\n' || target.back() == '\r')) {
      target.pop_back();
    }
    return path / target;
  }
  return path;
}

std::string archive_content_hash(const std::filesystem::path& dir) {
  const auto resolved = resolve_archive_dir(dir);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(resolved / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(resolved.string() + "/manifest.json: " + e.what());
  }
  return manifest.at("content_hash").get<std::string>();
}

ModelArtifacts load_archive(const std::filesystem::path& path) {
  const std::filesystem::path dir = resolve_archive_dir(path);
  if (!std::filesystem::exists(dir / "manifest.json")) {
    throw IoError("no archive manifest at " + dir.string());
  }

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptionError(dir.string() + "/manifest.json: invalid JSON: " + e.what());
  }

  const int version = manifest.at("format_version").get<int>();
  if (version != kArchiveFormatVersion) {
    throw VersionError("archive format version " + std::to_string(version) +
                       " not supported (supported: " +
                       std::to_string(kArchiveFormatVersion) + ")");
  }

  std::unordered_map<std::string, std::string> blobs;
  for (const auto& [name, digest] : manifest.at("files").items()) {
    std::string bytes = read_file(dir / name);
    if (sha256_hex(bytes) != digest.get<std::string>()) {
      throw CorruptionError("archive blob " + name + " fails its manifest hash at " +
                            dir.string());
    }
    blobs.emplace(name, std::move(bytes));
  }

  const auto blob = [&blobs, &dir](const std::string& name) -> const std::string& {
    const auto it = blobs.find(name);
    if (it == blobs.end()) {
      throw CorruptionError("archive at " + dir.string() + " is missing " + name);
    }
    return it->second;
  };

  ModelArtifacts artifacts;
  artifacts.config_snapshot = manifest.value("config", nlohmann::json::object());
  artifacts.train_date = manifest.value("train_date", std::string{});
  artifacts.entities = vocab_from_tsv(blob("entities.tsv"), "entities.tsv");
  artifacts.relations = vocab_from_tsv(blob("relations.tsv"), "relations.tsv");

  {
    const std::string& bytes = blob("E.bin");
    if (bytes.size() < 4 || bytes.substr(0, 4) != "RRE1") {
      throw CorruptionError("E.bin: bad magic");
    }
    BinReader r(bytes, "E.bin");
    (void)r.u32();
    artifacts.params.n_entities = r.u64();
    artifacts.params.dim = static_cast<int>(r.u32());
    artifacts.params.entity_embeddings.resize(artifacts.params.n_entities *
                                              static_cast<size_t>(artifacts.params.dim));
    for (auto& v : artifacts.params.entity_embeddings) v = r.f32();
    r.expect_end();
  }
  {
    const std::string& bytes = blob("R.bin");
    if (bytes.size() < 4 || bytes.substr(0, 4) != "RRR1") {
      throw CorruptionError("R.bin: bad magic");
    }
    BinReader r(bytes, "R.bin");
    (void)r.u32();
    artifacts.params.n_relations = r.u64();
    const int dim = static_cast<int>(r.u32());
    if (dim != artifacts.params.dim) {
      throw CorruptionError("R.bin dimension disagrees with E.bin");
    }
    artifacts.params.relation_transforms.resize(artifacts.params.n_relations *
                                                static_cast<size_t>(dim) * dim);
    for (auto& v : artifacts.params.relation_transforms) v = r.f32();
    r.expect_end();
  }

  if (artifacts.params.n_entities != artifacts.entities.size() ||
      artifacts.params.n_relations != artifacts.relations.size()) {
    throw CorruptionError("archive vocabulary sizes disagree with parameter shapes");
  }

  artifacts.profiles = deserialize_profiles(blob("profiles.bin"), "profiles.bin");
  artifacts.simindex = deserialize_simindex(blob("simindex.bin"), "simindex.bin");
  if (blobs.contains("encoder.bin")) {
    artifacts.encoder = deserialize_encoder(blob("encoder.bin"), "encoder.bin");
  }
  return artifacts;
}

std::filesystem::path deploy_archive(const std::filesystem::path& archive_dir,
                                     const std::filesystem::path& serving_dir) {
  const std::string hash = archive_content_hash(archive_dir);
  const std::string name = "archive-" + hash.substr(0, 16);
  std::filesystem::create_directories(serving_dir);

  const std::filesystem::path target = serving_dir / name;
  if (!std::filesystem::exists(target)) {
    // Hidden staging dir on the same filesystem, then one rename.
    const std::filesystem::path staging =
        serving_dir / (".staging-" + hash.substr(0, 16));
    std::filesystem::remove_all(staging);
    std::filesystem::create_directories(staging);
    for (const auto& entry : std::filesystem::directory_iterator(archive_dir)) {
      std::filesystem::copy_file(entry.path(), staging / entry.path().filename(),
                                 std::filesystem::copy_options::overwrite_existing);
    }
    std::filesystem::rename(staging, target);
  }

  atomic_write_file(serving_dir / "CURRENT", name + "\n");

  // Prune archives no longer referenced by CURRENT.
  for (const auto& entry : std::filesystem::directory_iterator(serving_dir)) {
    if (!entry.is_directory()) continue;
    const std::string base = entry.path().filename().string();
    if (base.rfind("archive-", 0) == 0 && base != name) {
      std::filesystem::remove_all(entry.path());
    }
    if (base.rfind(".staging-", 0) == 0) {
      std::filesystem::remove_all(entry.path());
    }
  }
  return target;
}

}  // namespace ripplerec
