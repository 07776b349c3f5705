#include "medlit/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "medlit/error.hpp"
#include "medlit/text.hpp"

namespace medlit {
namespace {

using nlohmann::json;

void merge_known(json& base, const json& patch, const std::string& prefix) {
    if (!patch.is_object()) throw InvalidParameter("config section '" + prefix + "' must be an object");
    for (const auto& [key, value] : patch.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        auto it = base.find(key);
        if (it == base.end()) throw InvalidParameter("unknown config key: " + path);
        if (it->is_object()) {
            merge_known(*it, value, path);
        } else {
            const bool ok = (it->is_number_float() && value.is_number()) ||
                            (it->is_number_integer() && value.is_number_integer()) ||
                            (it->is_boolean() && value.is_boolean()) || (it->is_string() && value.is_string());
            if (!ok) throw InvalidParameter("config key '" + path + "' has the wrong type");
            *it = it->is_number_float() ? json(value.get<double>()) : value;
        }
    }
}

json parse_scalar_like(const json& like, const std::string& key, const std::string& text) {
    try {
        if (like.is_boolean()) {
            const auto v = to_lower_ascii(trim(text));
            if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
            if (v == "0" || v == "false" || v == "no" || v == "off") return false;
            throw std::invalid_argument("not a boolean");
        }
        std::size_t used = 0;
        if (like.is_number_integer()) {
            const long long v = std::stoll(text, &used);
            if (used != text.size()) throw std::invalid_argument("trailing characters");
            return v;
        }
        if (like.is_number()) {
            const double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument("trailing characters");
            return v;
        }
    } catch (const std::exception&) {
        throw InvalidParameter("cannot parse value '" + text + "' for config key " + key);
    }
    return text;
}

json* find_leaf(json& root, const std::string& dotted) {
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted.find('.', start);
        const auto part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        auto it = node->find(part);
        if (it == node->end()) return nullptr;
        node = &*it;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return node->is_object() ? nullptr : node;
}

void collect_leaves(const json& node, const std::string& prefix, std::vector<std::string>& out) {
    for (const auto& [key, value] : node.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) collect_leaves(value, path, out);
        else out.push_back(path);
    }
}

}  // namespace

void AppConfig::validate() const {
    fusion.validate();
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("answer.alpha must lie in [0, 1]");
    if (max_answers == 0) throw InvalidParameter("answer.max_answers must be positive");
    if (chunk_window == 0 || chunk_overlap >= chunk_window) {
        throw InvalidParameter("ingest.chunk_overlap must be smaller than ingest.chunk_window");
    }
    if (embedding_dimension == 0) throw InvalidParameter("embedding_dimension must be positive");
    if (session_ttl_seconds <= 0) throw InvalidParameter("session.ttl_seconds must be positive");
    if (port < 0 || port > 65535) throw InvalidParameter("server.port out of range");
    if (providers.timeout_ms <= 0) throw InvalidParameter("providers.timeout_ms must be positive");
    if (!(bm25.k1 >= 0.0) || !(bm25.b >= 0.0 && bm25.b <= 1.0)) throw InvalidParameter("bm25 parameters out of range");
}

json config_to_json(const AppConfig& c) {
    return json{
        {"artifacts_dir", c.artifacts_dir},
        {"corpus_path", c.corpus_path},
        {"fusion",
         {{"bm25_threshold", c.fusion.bm25_threshold},
          {"cosine_threshold", c.fusion.cosine_threshold},
          {"top_k", c.fusion.top_k},
          {"strategy", std::string(strategy_name(c.fusion.strategy))},
          {"w_bm25", c.fusion.w_bm25},
          {"w_cosine", c.fusion.w_cosine}}},
        {"answer", {{"alpha", c.alpha}, {"max_answers", c.max_answers}, {"max_span_tokens", c.max_span_tokens}}},
        {"ingest",
         {{"chunk_window", c.chunk_window},
          {"chunk_overlap", c.chunk_overlap},
          {"max_abstract_tokens", c.max_abstract_tokens},
          {"max_body_paragraphs", c.max_body_paragraphs}}},
        {"bm25", {{"k1", c.bm25.k1}, {"b", c.bm25.b}}},
        {"embedding_dimension", c.embedding_dimension},
        {"providers",
         {{"embedder", c.providers.embedder},
          {"extractor", c.providers.extractor},
          {"classifier", c.providers.classifier},
          {"generator", c.providers.generator},
          {"timeout_ms", c.providers.timeout_ms}}},
        {"dictionary_path", c.dictionary_path},
        {"session", {{"ttl_seconds", c.session_ttl_seconds}, {"snapshot_path", c.session_snapshot}}},
        {"server", {{"host", c.host}, {"port", c.port}}},
        {"debug", c.debug},
    };
}

AppConfig config_from_json(const json& j) {
    json merged = config_to_json(AppConfig{});
    merge_known(merged, j, "");
    AppConfig c;
    c.artifacts_dir = merged["artifacts_dir"];
    c.corpus_path = merged["corpus_path"];
    const auto& f = merged["fusion"];
    c.fusion.bm25_threshold = f["bm25_threshold"];
    c.fusion.cosine_threshold = f["cosine_threshold"];
    const auto top_k = f["top_k"].get<long long>();
    if (top_k < 1) throw InvalidParameter("fusion.top_k must be at least 1");
    c.fusion.top_k = static_cast<std::size_t>(top_k);
    c.fusion.strategy = parse_strategy(f["strategy"].get<std::string>());
    c.fusion.w_bm25 = f["w_bm25"];
    c.fusion.w_cosine = f["w_cosine"];
    const auto& a = merged["answer"];
    c.alpha = a["alpha"];
    c.max_answers = a["max_answers"];
    c.max_span_tokens = a["max_span_tokens"];
    const auto& in = merged["ingest"];
    c.chunk_window = in["chunk_window"];
    c.chunk_overlap = in["chunk_overlap"];
    c.max_abstract_tokens = in["max_abstract_tokens"];
    c.max_body_paragraphs = in["max_body_paragraphs"];
    c.bm25.k1 = merged["bm25"]["k1"];
    c.bm25.b = merged["bm25"]["b"];
    c.embedding_dimension = merged["embedding_dimension"];
    const auto& p = merged["providers"];
    c.providers.embedder = p["embedder"];
    c.providers.extractor = p["extractor"];
    c.providers.classifier = p["classifier"];
    c.providers.generator = p["generator"];
    c.providers.timeout_ms = p["timeout_ms"];
    c.dictionary_path = merged["dictionary_path"];
    c.session_ttl_seconds = merged["session"]["ttl_seconds"];
    c.session_snapshot = merged["session"]["snapshot_path"];
    c.host = merged["server"]["host"];
    c.port = merged["server"]["port"];
    c.debug = merged["debug"];
    c.validate();
    return c;
}

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

std::string env_var_for(const std::string& dotted_key) {
    std::string out = "MEDLIT_";
    for (char ch : dotted_key) {
        out.push_back(ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
    return out;
}

void set_config_value(AppConfig& cfg, const std::string& dotted_key, const std::string& value) {
    json tree = config_to_json(cfg);
    json* leaf = find_leaf(tree, dotted_key);
    if (!leaf) throw InvalidParameter("unknown config key: " + dotted_key);
    *leaf = parse_scalar_like(*leaf, dotted_key, value);
    cfg = config_from_json(tree);
}

AppConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
    json tree = config_to_json(AppConfig{});
    if (file) {
        std::ifstream in(*file);
        if (!in) throw NotFound("config file not found: " + file->string());
        json from_file;
        try {
            from_file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw InvalidParameter(std::string("config file is not valid JSON: ") + e.what());
        }
        merge_known(tree, from_file, "");
    }
    std::vector<std::string> leaves;
    collect_leaves(tree, "", leaves);
    for (const auto& key : leaves) {
        if (auto v = env(env_var_for(key))) {
            json* leaf = find_leaf(tree, key);
            *leaf = parse_scalar_like(*leaf, key, *v);
        }
    }
    return config_from_json(tree);
}

}  // namespace medlit
