#include "medlit/nlu.hpp"

#include <algorithm>
#include <fstream>

#include "medlit/error.hpp"
#include "medlit/text.hpp"

namespace medlit {
namespace {

bool contains_sequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

bool only_whitespace(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

}  // namespace

DiseaseDictionary::DiseaseDictionary(std::vector<DiseaseFamily> families) : families_(std::move(families)) {
    for (std::size_t f = 0; f < families_.size(); ++f) {
        auto& fam = families_[f];
        if (fam.canonical.empty()) fam.canonical = fam.expansions.empty() ? fam.name : fam.expansions.front();
        for (const auto& alias : fam.aliases) {
            auto toks = tokenize(alias);
            if (!toks.empty()) patterns_.push_back({std::move(toks), f});
        }
    }
    std::stable_sort(patterns_.begin(), patterns_.end(),
                     [](const AliasPattern& a, const AliasPattern& b) { return a.tokens.size() > b.tokens.size(); });
}

DiseaseDictionary DiseaseDictionary::builtin() {
    return DiseaseDictionary({
        {"covid",
         {"covid", "covid-19", "covid19", "sars-cov-2", "2019-ncov", "ncov", "coronavirus", "corona virus",
          "novel coronavirus"},
         {"covid-19", "sars-cov-2", "coronavirus"},
         "covid-19"},
        {"mers",
         {"mers", "mers-cov", "middle east respiratory syndrome"},
         {"mers", "mers-cov", "middle east respiratory syndrome"},
         "mers"},
        {"sars",
         {"sars", "sars-cov", "sars-cov-1", "severe acute respiratory syndrome"},
         {"sars", "sars-cov", "severe acute respiratory syndrome"},
         "sars"},
    });
}

DiseaseDictionary DiseaseDictionary::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidInput("disease dictionary must be an object of families");
    std::vector<DiseaseFamily> families;
    try {
        for (const auto& [name, body] : j.items()) {
            DiseaseFamily f;
            f.name = name;
            f.aliases = body.at("aliases").get<std::vector<std::string>>();
            f.expansions = body.value("expansions", std::vector<std::string>{});
            f.canonical = body.value("canonical", std::string{});
            families.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("disease dictionary malformed: ") + e.what());
    }
    return DiseaseDictionary(std::move(families));
}

DiseaseDictionary DiseaseDictionary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("disease dictionary not found: " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(std::string("disease dictionary is not valid JSON: ") + e.what());
    }
}

nlohmann::json DiseaseDictionary::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& f : families_) {
        j[f.name] = {{"aliases", f.aliases}, {"expansions", f.expansions}, {"canonical", f.canonical}};
    }
    return j;
}

std::vector<DiseaseDictionary::Match> DiseaseDictionary::find(const std::vector<std::string>& tokens) const {
    std::vector<Match> out;
    std::size_t i = 0;
    while (i < tokens.size()) {
        const AliasPattern* hit = nullptr;
        for (const auto& p : patterns_) {
            if (i + p.tokens.size() <= tokens.size() &&
                std::equal(p.tokens.begin(), p.tokens.end(), tokens.begin() + static_cast<long>(i))) {
                hit = &p;
                break;
            }
        }
        if (hit) {
            out.push_back({hit->family, i, i + hit->tokens.size()});
            i += hit->tokens.size();
        } else {
            ++i;
        }
    }
    return out;
}

Classification DictionaryClassifier::classify(std::string_view text) const {
    const bool hit = !dictionary_.find(tokenize(text)).empty();
    return Classification{hit, hit ? 1.0 : 0.0, std::nullopt};
}

std::string resolve_coreference(const std::vector<std::string>& session_entities, std::string_view utterance) {
    if (session_entities.empty()) return std::string(utterance);
    const std::string& entity = session_entities.back();
    const auto toks = tokenize_with_offsets(utterance);

    std::string out;
    std::size_t copied = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        std::size_t end_tok = i;
        const auto& t = toks[i].token;
        if (t == "the" && i + 1 < toks.size() && (toks[i + 1].token == "virus" || toks[i + 1].token == "disease") &&
            only_whitespace(utterance.substr(toks[i].end, toks[i + 1].begin - toks[i].end))) {
            end_tok = i + 1;
        } else if (t != "it" && t != "this" && t != "that") {
            continue;
        }
        out.append(utterance.substr(copied, toks[i].begin - copied));
        out.append(entity);
        copied = toks[end_tok].end;
        i = end_tok;
    }
    out.append(utterance.substr(copied));
    return out;
}

Classification detect_covid(std::string_view text, const CovidClassifier& classifier,
                            const DiseaseDictionary& fallback) {
    try {
        auto c = classifier.classify(text);
        c.confidence = std::clamp(c.confidence, 0.0, 1.0);
        return c;
    } catch (const ProviderError& e) {
        auto c = DictionaryClassifier(fallback).classify(text);
        c.warning = std::string("covid classifier unavailable, used keyword dictionary: ") + e.what();
        return c;
    }
}

Enrichment enrich_query(std::string_view text, const DiseaseDictionary& dictionary) {
    Enrichment result{std::string(text), {}};
    auto tokens = tokenize(text);
    const auto matches = dictionary.find(tokens);

    std::vector<std::size_t> families;
    for (const auto& m : matches) {
        if (std::find(families.begin(), families.end(), m.family) == families.end()) families.push_back(m.family);
    }
    for (std::size_t f : families) {
        const auto& fam = dictionary.families()[f];
        result.entities.push_back(fam.canonical);
        for (const auto& exp : fam.expansions) {
            auto exp_tokens = tokenize(exp);
            if (exp_tokens.empty() || contains_sequence(tokens, exp_tokens)) continue;
            if (!result.text.empty() && result.text.back() != ' ') result.text.push_back(' ');
            result.text += exp;
            tokens.insert(tokens.end(), exp_tokens.begin(), exp_tokens.end());
        }
    }
    return result;
}

TurnAnalysis analyze_turn(const std::vector<std::string>& session_entities, std::string_view utterance,
                          const CovidClassifier& classifier, const DiseaseDictionary& dictionary) {
    TurnAnalysis a;
    a.raw_text = std::string(utterance);
    a.resolved_text = resolve_coreference(session_entities, utterance);
    const auto c = detect_covid(a.resolved_text, classifier, dictionary);
    a.is_covid = c.is_covid;
    a.confidence = c.confidence;
    a.warning = c.warning;
    if (a.is_covid) {
        auto e = enrich_query(a.resolved_text, dictionary);
        a.enriched_text = std::move(e.text);
        a.matched_entities = std::move(e.entities);
    } else {
        a.enriched_text = a.resolved_text;
    }
    return a;
}

nlohmann::json to_json(const TurnAnalysis& a) {
    nlohmann::json j{{"raw_text", a.raw_text},
                     {"resolved_text", a.resolved_text},
                     {"is_covid", a.is_covid},
                     {"confidence", a.confidence},
                     {"enriched_text", a.enriched_text},
                     {"matched_entities", a.matched_entities}};
    if (a.warning) j["warning"] = *a.warning;
    return j;
}

}  // namespace medlit
