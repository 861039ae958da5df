#include "dirspeech/audio_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dirspeech/error.hpp"

namespace dirspeech {

using nlohmann::json;

AudioClip AudioClip::mono(Signal samples, int rate) {
    AudioClip clip;
    clip.channels.push_back(std::move(samples));
    clip.sample_rate = rate;
    return clip;
}

AudioClip AudioClip::zeros(std::size_t num_channels, std::size_t length, int rate) {
    AudioClip clip;
    clip.channels.assign(num_channels, Signal(length, 0.0));
    clip.sample_rate = rate;
    return clip;
}

void AudioClip::validate() const {
    if (channels.empty()) throw ValidationError("audio clip has no channels");
    if (sample_rate <= 0) throw ValidationError("audio clip sample rate must be positive");
    const auto n = channels.front().size();
    for (const auto& ch : channels) {
        if (ch.size() != n) throw ValidationError("audio clip channels differ in length");
    }
}

void require_canonical_rate(const AudioClip& clip, std::string_view context) {
    if (clip.sample_rate != kSampleRate) {
        std::ostringstream msg;
        msg << context << ": expected " << kSampleRate << " Hz audio, got " << clip.sample_rate
            << " Hz (resampling is not supported)";
        throw ValidationError(msg.str());
    }
}

// ---------------------------------------------------------------------------
// WAV

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

static_assert(std::endian::native == std::endian::little, "WAV codec assumes a little-endian host");

template <typename T>
T load_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

template <typename T>
void store_le(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
    const std::string bytes = slurp(path);
    const auto where = [&](const std::string& what) { return path.string() + ": " + what; };

    if (bytes.size() < 12) throw IoError(where("truncated RIFF header"));
    if (bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
        throw FormatError(where("not a RIFF/WAVE file"));
    }

    std::uint16_t format = 0, num_channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    const char* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::string id = bytes.substr(pos, 4);
        const auto size = load_le<std::uint32_t>(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (id == "fmt ") {
            if (size < 16 || body + size > bytes.size()) throw IoError(where("truncated fmt chunk"));
            format = load_le<std::uint16_t>(bytes.data() + body);
            num_channels = load_le<std::uint16_t>(bytes.data() + body + 2);
            rate = load_le<std::uint32_t>(bytes.data() + body + 4);
            bits = load_le<std::uint16_t>(bytes.data() + body + 14);
            if (format == kFormatExtensible) {
                if (size < 26) throw FormatError(where("short WAVE_FORMAT_EXTENSIBLE header"));
                format = load_le<std::uint16_t>(bytes.data() + body + 24);
            }
            have_fmt = true;
        } else if (id == "data") {
            if (body + size > bytes.size()) throw IoError(where("truncated data chunk"));
            data = bytes.data() + body;
            data_size = size;
            break;
        }
        pos = body + size + (size & 1u);
    }

    if (!have_fmt) throw FormatError(where("missing fmt chunk"));
    if (data == nullptr) throw IoError(where("missing data chunk"));
    if (num_channels == 0) throw FormatError(where("zero channels"));
    if (rate == 0) throw FormatError(where("zero sample rate"));

    const bool pcm16 = format == kFormatPcm && bits == 16;
    const bool float32 = format == kFormatFloat && bits == 32;
    if (!pcm16 && !float32) {
        throw FormatError(where("unsupported encoding (format " + std::to_string(format) + ", " +
                                std::to_string(bits) + " bits); expected PCM16 or float32"));
    }

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * num_channels;
    if (data_size % frame_bytes != 0) throw IoError(where("data chunk ends mid-frame"));
    const std::size_t frames = data_size / frame_bytes;

    AudioClip clip = AudioClip::zeros(num_channels, frames, static_cast<int>(rate));
    for (std::size_t i = 0; i < frames; ++i) {
        for (std::size_t c = 0; c < num_channels; ++c) {
            const char* p = data + i * frame_bytes + c * bytes_per_sample;
            clip.channels[c][i] = pcm16 ? load_le<std::int16_t>(p) / 32768.0
                                        : static_cast<double>(load_le<float>(p));
        }
    }
    return clip;
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path, WavEncoding encoding) {
    clip.validate();
    const bool pcm16 = encoding == WavEncoding::Pcm16;
    const std::uint16_t bits = pcm16 ? 16 : 32;
    const auto num_channels = static_cast<std::uint16_t>(clip.num_channels());
    const std::uint32_t block_align = num_channels * bits / 8;
    const std::uint32_t data_size = static_cast<std::uint32_t>(clip.length()) * block_align;

    std::string out;
    out.reserve(44 + data_size);
    out += "RIFF";
    store_le<std::uint32_t>(out, 36 + data_size);
    out += "WAVEfmt ";
    store_le<std::uint32_t>(out, 16);
    store_le<std::uint16_t>(out, pcm16 ? kFormatPcm : kFormatFloat);
    store_le<std::uint16_t>(out, num_channels);
    store_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate));
    store_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate) * block_align);
    store_le<std::uint16_t>(out, static_cast<std::uint16_t>(block_align));
    store_le<std::uint16_t>(out, bits);
    out += "data";
    store_le<std::uint32_t>(out, data_size);

    for (std::size_t i = 0; i < clip.length(); ++i) {
        for (const auto& ch : clip.channels) {
            if (pcm16) {
                // Full-scale positive is 32767/32768; NaN maps to silence.
                const double x = std::isnan(ch[i]) ? 0.0 : std::clamp(ch[i] * 32768.0, -32768.0, 32767.0);
                store_le<std::int16_t>(out, static_cast<std::int16_t>(std::lround(x)));
            } else {
                store_le<float>(out, static_cast<float>(ch[i]));
            }
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path.string() + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Roles and manifests

std::string_view to_string(Role role) { return role == Role::Wearer ? "wearer" : "partner"; }

Role parse_role(std::string_view name) {
    if (name == "wearer") return Role::Wearer;
    if (name == "partner") return Role::Partner;
    throw ArgumentError("unknown speaker role '" + std::string(name) + "'");
}

std::map<Role, std::string> ManifestEntry::languages() const {
    std::map<Role, std::string> langs;
    for (const auto& seg : segments) langs.try_emplace(seg.speaker, seg.lang);
    return langs;
}

std::vector<Segment> ManifestEntry::segments_of(Role role) const {
    std::vector<Segment> out;
    for (const auto& seg : segments) {
        if (seg.speaker == role) out.push_back(seg);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Segment& a, const Segment& b) { return a.start < b.start; });
    return out;
}

void ManifestEntry::validate() const {
    if (id.empty()) throw ValidationError("manifest entry has an empty id");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (!(s.start >= 0.0) || !(s.start < s.end)) {
            std::ostringstream msg;
            msg << "entry '" << id << "' segment " << i << " (" << to_string(s.speaker) << ", "
                << s.start << "-" << s.end << "): requires 0 <= start < end";
            throw ValidationError(msg.str());
        }
    }
}

namespace {

Segment segment_from_json(const json& j) {
    Segment s;
    s.speaker = parse_role(j.at("speaker").get<std::string>());
    s.start = j.at("start").get<double>();
    s.end = j.at("end").get<double>();
    s.text = j.value("text", "");
    s.lang = j.value("lang", "");
    s.translation = j.value("translation", "");
    return s;
}

json segment_to_json(const Segment& s) {
    return json{{"speaker", to_string(s.speaker)}, {"start", s.start},   {"end", s.end},
                {"text", s.text},                  {"lang", s.lang},     {"translation", s.translation}};
}

std::string line_prefix(std::size_t line_number) {
    return line_number > 0 ? "line " + std::to_string(line_number) + ": " : std::string{};
}

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        fn(line, n);
    }
}

void write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

}  // namespace

ManifestEntry parse_manifest_line(std::string_view line, std::size_t line_number) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_prefix(line_number) + "malformed JSON: " + e.what());
    }
    ManifestEntry entry;
    try {
        entry.id = j.at("id").get<std::string>();
        entry.wav = j.value("wav", "");
        if (j.contains("clean_wearer")) entry.clean_wearer = j["clean_wearer"].get<std::string>();
        if (j.contains("clean_partner")) entry.clean_partner = j["clean_partner"].get<std::string>();
        for (const auto& seg : j.value("segments", json::array())) {
            entry.segments.push_back(segment_from_json(seg));
        }
    } catch (const json::exception& e) {
        throw ValidationError(line_prefix(line_number) + "bad manifest field: " + e.what());
    } catch (const ArgumentError& e) {
        throw ValidationError(line_prefix(line_number) + e.what());
    }
    try {
        entry.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(line_prefix(line_number) + e.what());
    }
    return entry;
}

std::string to_manifest_line(const ManifestEntry& entry) {
    json j{{"id", entry.id}, {"wav", entry.wav}};
    if (entry.clean_wearer) j["clean_wearer"] = *entry.clean_wearer;
    if (entry.clean_partner) j["clean_partner"] = *entry.clean_partner;
    j["segments"] = json::array();
    for (const auto& s : entry.segments) j["segments"].push_back(segment_to_json(s));
    return j.dump();
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::vector<ManifestEntry> entries;
    for_each_line(path, [&](const std::string& line, std::size_t n) {
        entries.push_back(parse_manifest_line(line, n));
    });
    return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path) {
    std::vector<std::string> lines;
    lines.reserve(entries.size());
    for (const auto& e : entries) lines.push_back(to_manifest_line(e));
    write_lines(lines, path);
}

std::vector<ClipEntry> read_clip_manifest(const std::filesystem::path& path) {
    std::vector<ClipEntry> clips;
    for_each_line(path, [&](const std::string& line, std::size_t n) {
        try {
            const json j = json::parse(line);
            clips.push_back(ClipEntry{j.at("id").get<std::string>(), j.at("wav").get<std::string>(),
                                      j.value("text", ""), j.value("lang", ""),
                                      j.value("translation", "")});
        } catch (const json::parse_error& e) {
            throw ParseError(line_prefix(n) + "malformed JSON: " + e.what());
        } catch (const json::exception& e) {
            throw ValidationError(line_prefix(n) + "bad clip field: " + e.what());
        }
    });
    return clips;
}

void write_clip_manifest(const std::vector<ClipEntry>& clips, const std::filesystem::path& path) {
    std::vector<std::string> lines;
    for (const auto& c : clips) {
        lines.push_back(json{{"id", c.id},
                             {"wav", c.wav},
                             {"text", c.text},
                             {"lang", c.lang},
                             {"translation", c.translation}}
                            .dump());
    }
    write_lines(lines, path);
}

std::filesystem::path resolve_beside(const std::filesystem::path& manifest, std::string_view stored) {
    std::filesystem::path p{std::string(stored)};
    if (p.is_absolute()) return p;
    return manifest.parent_path() / p;
}

}  // namespace dirspeech
