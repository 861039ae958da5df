#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dirspeech/audio_io.hpp"
#include "dirspeech/scene_sim.hpp"

namespace dirspeech {

/// Small synthetic bilingual corpus for demos and tests: word-aligned
/// vocabularies in en/es/fr/it and a speech-like signal generator. It stands
/// in for real recordings when none are available.
namespace demo {

const std::vector<std::string>& languages();
const std::vector<std::string>& vocabulary(std::string_view lang);

/// Random sentence of `words` vocabulary indices.
std::vector<std::size_t> random_sentence(std::size_t words, std::uint64_t seed);
std::string render(const std::vector<std::size_t>& sentence, std::string_view lang);

/// Voiced, syllable-modulated harmonic signal, roughly 0.4 s per word, RMS 0.1.
AudioClip synth_utterance(std::size_t words, double f0_hz, std::uint64_t seed);

/// Utterance in `lang` with its word-for-word translation into `target_lang`.
SourceClip make_clip(std::size_t words, std::string_view lang, std::string_view target_lang, double f0_hz,
                     std::uint64_t seed);

}  // namespace demo
}  // namespace dirspeech
