#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "medlit/corpus.hpp"
#include "medlit/dense_index.hpp"
#include "medlit/dialogue.hpp"
#include "medlit/sparse_index.hpp"

// On-disk layout of an artifact directory.
namespace medlit {

namespace files {
inline constexpr const char* kDocuments = "documents.jsonl";
inline constexpr const char* kChunks = "chunks.jsonl";
inline constexpr const char* kDropReport = "drop_report.json";
inline constexpr const char* kSparseIndex = "sparse.idx";
inline constexpr const char* kVectorManifest = "vectors.manifest.json";
inline constexpr const char* kVectorMatrix = "vectors.f32";
}  // namespace files

nlohmann::json to_json(const DropReport& r);

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus, const DropReport& report);
Corpus read_corpus(const std::filesystem::path& dir);

void write_index(const std::filesystem::path& dir, const InvertedIndex& index);
InvertedIndex read_index(const std::filesystem::path& dir);

void write_store(const std::filesystem::path& dir, const DenseStore& store);
DenseStore read_store(const std::filesystem::path& dir);

/// Loads corpus, index and vectors and checks that they agree.
Artifacts load_artifacts(const std::filesystem::path& dir);

/// CRC-32 (hex) of each artifact file present in the directory.
std::map<std::string, std::string> artifact_checksums(const std::filesystem::path& dir);

std::string file_crc32(const std::filesystem::path& path);

}  // namespace medlit
