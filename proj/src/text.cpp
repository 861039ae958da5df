#include "dirspeech/text.hpp"

#include <cctype>
#include <sstream>

namespace dirspeech {

Words split_words(std::string_view text) {
    Words words;
    std::istringstream in{std::string(text)};
    std::string w;
    while (in >> w) words.push_back(std::move(w));
    return words;
}

std::string join_words(const Words& words, std::size_t first) {
    std::string out;
    for (std::size_t i = first; i < words.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += words[i];
    }
    return out;
}

std::string normalize_text(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::ispunct(c)) continue;
        cleaned.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
    return join_words(split_words(cleaned));
}

Words normalized_words(std::string_view text) { return split_words(normalize_text(text)); }

}  // namespace dirspeech
