#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dirspeech {

using Words = std::vector<std::string>;

/// Whitespace tokenization, no other changes.
Words split_words(std::string_view text);
std::string join_words(const Words& words, std::size_t first = 0);

/// Scoring normalization: ASCII lowercase, ASCII punctuation removed,
/// whitespace collapsed. Non-ASCII bytes pass through.
std::string normalize_text(std::string_view text);
Words normalized_words(std::string_view text);

}  // namespace dirspeech
