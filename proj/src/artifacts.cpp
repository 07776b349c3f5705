#include "medlit/artifacts.hpp"

#include <cstdio>
#include <fstream>

#include <zlib.h>

#include "medlit/error.hpp"

namespace medlit {
namespace fs = std::filesystem;

nlohmann::json to_json(const DropReport& r) {
    return {{"input", r.input},
            {"deduped", r.deduped},
            {"dropped_no_abstract", r.dropped_no_abstract},
            {"dropped_no_body", r.dropped_no_body},
            {"dropped_abstract_len", r.dropped_abstract_len},
            {"dropped_body_len", r.dropped_body_len},
            {"kept", r.kept}};
}

void write_corpus(const fs::path& dir, const Corpus& corpus, const DropReport& report) {
    fs::create_directories(dir);
    std::ofstream docs(dir / files::kDocuments);
    for (const auto& d : corpus.documents()) write_document(docs, d);
    std::ofstream chunks(dir / files::kChunks);
    for (const auto& c : corpus.all_chunks()) {
        chunks << nlohmann::json{{"chunk_id", c.chunk_id},
                                 {"doc_id", c.doc_id},
                                 {"token_start", c.token_start},
                                 {"token_end", c.token_end},
                                 {"text", c.text}}
                      .dump()
               << '\n';
    }
    std::ofstream rep(dir / files::kDropReport);
    rep << to_json(report).dump(2) << '\n';
    if (!docs || !chunks || !rep) throw Error("failed writing corpus artifacts to " + dir.string());
}

Corpus read_corpus(const fs::path& dir) {
    std::ifstream docs(dir / files::kDocuments);
    if (!docs) throw NotFound("no " + std::string(files::kDocuments) + " in " + dir.string());
    auto parsed = parse_corpus(docs);
    if (!parsed.skipped.empty()) {
        throw CorruptArtifact("documents file line " + std::to_string(parsed.skipped.front().line_number) + ": " +
                              parsed.skipped.front().reason);
    }
    std::vector<Document> documents;
    for (const auto& r : parsed.records) documents.push_back(make_document(r));

    std::vector<Chunk> chunks;
    std::ifstream in(dir / files::kChunks);
    if (!in) throw NotFound("no " + std::string(files::kChunks) + " in " + dir.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            chunks.push_back(Chunk{j.at("chunk_id").get<std::string>(), j.at("doc_id").get<std::string>(),
                                   j.at("token_start").get<std::size_t>(), j.at("token_end").get<std::size_t>(),
                                   j.at("text").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw CorruptArtifact("chunks file line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return Corpus(std::move(documents), std::move(chunks));
}

void write_index(const fs::path& dir, const InvertedIndex& index) {
    fs::create_directories(dir);
    std::ofstream out(dir / files::kSparseIndex, std::ios::binary);
    index.save(out);
}

InvertedIndex read_index(const fs::path& dir) {
    std::ifstream in(dir / files::kSparseIndex, std::ios::binary);
    if (!in) throw NotFound("no " + std::string(files::kSparseIndex) + " in " + dir.string());
    return InvertedIndex::load(in);
}

void write_store(const fs::path& dir, const DenseStore& store) {
    fs::create_directories(dir);
    store.save(dir / files::kVectorManifest, dir / files::kVectorMatrix);
}

DenseStore read_store(const fs::path& dir) {
    return DenseStore::load(dir / files::kVectorManifest, dir / files::kVectorMatrix);
}

Artifacts load_artifacts(const fs::path& dir) {
    Artifacts a{read_corpus(dir), read_index(dir), read_store(dir)};
    a.check_consistent();
    return a;
}

std::string file_crc32(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("cannot read " + path.string());
    uLong crc = crc32(0L, Z_NULL, 0);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        const auto n = in.gcount();
        if (n > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(n));
    }
    char hex[9];
    std::snprintf(hex, sizeof hex, "%08lx", static_cast<unsigned long>(crc));
    return hex;
}

std::map<std::string, std::string> artifact_checksums(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const char* name : {files::kDocuments, files::kChunks, files::kDropReport, files::kSparseIndex, files::kVectorManifest,
                             files::kVectorMatrix}) {
        if (fs::exists(dir / name)) out.emplace(name, file_crc32(dir / name));
    }
    return out;
}

}  // namespace medlit
