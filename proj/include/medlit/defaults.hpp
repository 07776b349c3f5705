#pragma once

#include <cstddef>

// Operating point of the system. Thresholds are the tuned values for the
// combined BM25 + cosine strategy.
namespace medlit::defaults {

inline constexpr double kBm25Threshold = 2.77;
inline constexpr double kCosineThreshold = 0.89;
inline constexpr std::size_t kTopK = 20;
inline constexpr std::size_t kMaxAnswers = 5;
inline constexpr std::size_t kMaxDocumentList = 5;
inline constexpr std::size_t kMaxSpanTokens = 15;
inline constexpr std::size_t kChunkWindow = 220;
inline constexpr std::size_t kChunkOverlap = 50;
inline constexpr std::size_t kMaxAbstractTokens = 300;
inline constexpr std::size_t kMaxBodyParagraphs = 100;
inline constexpr std::size_t kEmbeddingDimension = 768;

inline constexpr double kBm25K1 = 1.5;
inline constexpr double kBm25B = 0.75;
inline constexpr double kAnswerAlpha = 0.5;
inline constexpr double kClassifierCutoff = 0.5;

}  // namespace medlit::defaults
