#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace medlit {

struct DiseaseFamily {
    std::string name;
    std::vector<std::string> aliases;
    std::vector<std::string> expansions;
    std::string canonical;  // entity recorded in session memory
};

/// Alias table for the disease families the keyword analyzer knows about.
/// Matching is token-based, leftmost-longest and non-overlapping, so
/// "sars-cov-2" resolves to the COVID family rather than SARS.
class DiseaseDictionary {
public:
    struct Match {
        std::size_t family = 0;
        std::size_t token_begin = 0;
        std::size_t token_end = 0;
    };

    DiseaseDictionary() = default;
    explicit DiseaseDictionary(std::vector<DiseaseFamily> families);

    /// COVID-19, MERS and SARS families.
    static DiseaseDictionary builtin();
    /// {family: {aliases: [...], expansions: [...], canonical?: "..."}}
    static DiseaseDictionary from_json(const nlohmann::json& j);
    static DiseaseDictionary load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    std::vector<Match> find(const std::vector<std::string>& tokens) const;
    const std::vector<DiseaseFamily>& families() const noexcept { return families_; }

private:
    struct AliasPattern {
        std::vector<std::string> tokens;
        std::size_t family;
    };
    std::vector<DiseaseFamily> families_;
    std::vector<AliasPattern> patterns_;  // longest first
};

struct Classification {
    bool is_covid = false;
    double confidence = 0.0;
    std::optional<std::string> warning;
};

class CovidClassifier {
public:
    virtual ~CovidClassifier() = default;
    /// Deterministic; confidence in [0, 1]. Throws ProviderError on failure.
    virtual Classification classify(std::string_view text) const = 0;
};

/// True with confidence 1 iff any alias of any family occurs in the text.
class DictionaryClassifier final : public CovidClassifier {
public:
    explicit DictionaryClassifier(DiseaseDictionary dictionary = DiseaseDictionary::builtin())
        : dictionary_(std::move(dictionary)) {}
    Classification classify(std::string_view text) const override;

private:
    DiseaseDictionary dictionary_;
};

/// Replaces standalone "it", "this", "that" and the phrases "the virus",
/// "the disease" with the most recent entity (last element). Unchanged when
/// there is no entity.
std::string resolve_coreference(const std::vector<std::string>& session_entities, std::string_view utterance);

/// Delegates to the classifier; on ProviderError falls back to the dictionary
/// classifier and sets a warning.
Classification detect_covid(std::string_view text, const CovidClassifier& classifier,
                            const DiseaseDictionary& fallback = DiseaseDictionary::builtin());

struct Enrichment {
    std::string text;
    std::vector<std::string> entities;  // canonical names, order of first match
};

/// Appends each matched family's expansion terms that are not already present.
Enrichment enrich_query(std::string_view text, const DiseaseDictionary& dictionary);

struct TurnAnalysis {
    std::string raw_text;
    std::string resolved_text;
    bool is_covid = false;
    double confidence = 0.0;
    std::string enriched_text;
    std::vector<std::string> matched_entities;
    std::optional<std::string> warning;
};

TurnAnalysis analyze_turn(const std::vector<std::string>& session_entities, std::string_view utterance,
                          const CovidClassifier& classifier, const DiseaseDictionary& dictionary);

nlohmann::json to_json(const TurnAnalysis& a);

}  // namespace medlit
