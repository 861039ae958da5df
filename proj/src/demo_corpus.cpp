#include "dirspeech/demo_corpus.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "dirspeech/error.hpp"

namespace dirspeech::demo {

namespace {

// Index-aligned, so word i in one language translates to word i in another.
const std::map<std::string, std::vector<std::string>, std::less<>>& vocabularies() {
    static const std::map<std::string, std::vector<std::string>, std::less<>> v{
        {"en", {"house", "water", "friend", "morning", "city", "train", "coffee", "book",   "window", "garden",
                "music", "river", "market", "bread",   "street", "night", "school", "doctor", "summer", "winter",
                "family", "table", "door",  "mountain", "ticket", "station", "beach", "museum", "kitchen", "letter",
                "phone",  "bridge", "forest", "island", "castle", "harbor", "painting", "language", "dinner", "journey",
                "weather", "holiday", "question", "answer", "village", "church", "flower", "cheese"}},
        {"es", {"casa",   "agua",   "amigo",  "mañana",  "ciudad",  "tren",    "café",    "libro",   "ventana",  "jardín",
                "música", "río",    "mercado", "pan",    "calle",   "noche",   "escuela", "médico",  "verano",   "invierno",
                "familia", "mesa",  "puerta", "montaña", "billete", "estación", "playa",  "museo",   "cocina",   "carta",
                "teléfono", "puente", "bosque", "isla",  "castillo", "puerto", "cuadro",  "idioma",  "cena",     "viaje",
                "tiempo", "vacaciones", "pregunta", "respuesta", "pueblo", "iglesia", "flor", "queso"}},
        {"fr", {"maison", "eau",    "ami",    "matin",   "ville",   "train",   "café",    "livre",   "fenêtre",  "jardin",
                "musique", "rivière", "marché", "pain",  "rue",     "nuit",    "école",   "médecin", "été",      "hiver",
                "famille", "table", "porte",  "montagne", "billet", "gare",    "plage",   "musée",   "cuisine",  "lettre",
                "téléphone", "pont", "forêt", "île",     "château", "port",    "tableau", "langue",  "dîner",    "voyage",
                "météo",  "vacances", "question", "réponse", "village", "église", "fleur", "fromage"}},
        {"it", {"casa",   "acqua",  "amico",  "mattina", "città",   "treno",   "caffè",   "libro",   "finestra", "giardino",
                "musica", "fiume",  "mercato", "pane",   "strada",  "notte",   "scuola",  "medico",  "estate",   "inverno",
                "famiglia", "tavolo", "porta", "montagna", "biglietto", "stazione", "spiaggia", "museo", "cucina", "lettera",
                "telefono", "ponte", "foresta", "isola", "castello", "porto",  "quadro",  "lingua",  "cena",     "viaggio",
                "meteo",  "vacanze", "domanda", "risposta", "paese",  "chiesa",  "fiore",   "formaggio"}},
    };
    return v;
}

}  // namespace

const std::vector<std::string>& languages() {
    static const std::vector<std::string> langs{"en", "es", "fr", "it"};
    return langs;
}

const std::vector<std::string>& vocabulary(std::string_view lang) {
    const auto& v = vocabularies();
    const auto it = v.find(lang);
    if (it == v.end()) throw ArgumentError("demo corpus has no language '" + std::string(lang) + "'");
    return it->second;
}

std::vector<std::size_t> random_sentence(std::size_t words, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, vocabulary("en").size() - 1);
    std::vector<std::size_t> s(words);
    for (auto& w : s) w = pick(rng);
    return s;
}

std::string render(const std::vector<std::size_t>& sentence, std::string_view lang) {
    const auto& vocab = vocabulary(lang);
    std::string out;
    for (std::size_t i = 0; i < sentence.size(); ++i) {
        if (i) out += ' ';
        out += vocab.at(sentence[i]);
    }
    return out;
}

AudioClip synth_utterance(std::size_t words, double f0_hz, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double fs = kSampleRate;
    const auto gap = static_cast<std::size_t>(0.05 * fs);

    Signal x;
    for (std::size_t w = 0; w < words; ++w) {
        const auto len = static_cast<std::size_t>((0.30 + 0.10 * uni(rng)) * fs);
        const double pitch = f0_hz * (0.9 + 0.2 * uni(rng));
        const double glide = 0.15 * (uni(rng) - 0.5);
        const double formant = 500.0 + 1500.0 * uni(rng);
        const double syllables = 1.0 + std::floor(2.0 * uni(rng));
        double phase = 0.0;
        for (std::size_t n = 0; n < len; ++n) {
            const double u = static_cast<double>(n) / static_cast<double>(len);
            const double f = pitch * (1.0 + glide * u);
            phase += 2.0 * std::numbers::pi * f / fs;
            double v = 0.0;
            for (int k = 1; k * f < 4000.0; ++k) {
                const double fk = k * f;
                const double shape = 1.0 / k + 0.8 * std::exp(-std::pow((fk - formant) / 300.0, 2.0));
                v += shape * std::sin(k * phase);
            }
            const double envelope = std::pow(std::sin(std::numbers::pi * u * syllables), 2.0);
            x.push_back(v * envelope);
        }
        x.insert(x.end(), gap, 0.0);
    }

    double e = 0.0;
    for (double v : x) e += v * v;
    const double gain = e > 0.0 ? 0.1 / std::sqrt(e / static_cast<double>(x.size())) : 0.0;
    for (auto& v : x) v *= gain;
    return AudioClip::mono(std::move(x));
}

SourceClip make_clip(std::size_t words, std::string_view lang, std::string_view target_lang, double f0_hz,
                     std::uint64_t seed) {
    const auto sentence = random_sentence(words, seed);
    return SourceClip{synth_utterance(words, f0_hz, seed ^ 0x9e3779b97f4a7c15ull), render(sentence, lang),
                      std::string(lang), render(sentence, target_lang)};
}

}  // namespace dirspeech::demo
