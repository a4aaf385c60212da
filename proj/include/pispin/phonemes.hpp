#pragma once

// ARPAbet phoneme inventory, CMU Pronouncing Dictionary reader, and a
// deterministic letter-to-sound fallback for out-of-vocabulary words.

#include <pispin/error.hpp>

#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pispin {

// The 39-symbol ARPAbet set used by the CMU dictionary, stress removed.
enum class Phoneme : std::uint8_t {
  AA, AE, AH, AO, AW, AY, B, CH, D, DH, EH, ER, EY, F, G, HH, IH, IY, JH, K,
  L, M, N, NG, OW, OY, P, R, S, SH, T, TH, UH, UW, V, W, Y, Z, ZH,
};

inline constexpr std::array<std::string_view, 39> kPhonemeNames = {
    "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH", "ER", "EY",
    "F",  "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",  "N",  "NG", "OW", "OY",
    "P",  "R",  "S",  "SH", "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH",
};

using PhonemeSeq = std::vector<Phoneme>;

inline std::string_view to_string(Phoneme p) { return kPhonemeNames[static_cast<std::size_t>(p)]; }

inline bool is_vowel(Phoneme p) {
  switch (p) {
    case Phoneme::AA: case Phoneme::AE: case Phoneme::AH: case Phoneme::AO: case Phoneme::AW:
    case Phoneme::AY: case Phoneme::EH: case Phoneme::ER: case Phoneme::EY: case Phoneme::IH:
    case Phoneme::IY: case Phoneme::OW: case Phoneme::OY: case Phoneme::UH: case Phoneme::UW:
      return true;
    default:
      return false;
  }
}

/// Parses "AE1", "ae", "AE" ... into a phoneme; stress digits are ignored.
inline std::optional<Phoneme> parse_phoneme(std::string_view symbol) {
  std::string bare;
  for (char c : symbol) {
    if (std::isdigit(static_cast<unsigned char>(c))) continue;
    bare.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  for (std::size_t i = 0; i < kPhonemeNames.size(); ++i) {
    if (kPhonemeNames[i] == bare) return static_cast<Phoneme>(i);
  }
  return std::nullopt;
}

inline std::string join(const PhonemeSeq& seq) {
  std::string out;
  for (auto p : seq) {
    if (!out.empty()) out.push_back(' ');
    out += to_string(p);
  }
  return out;
}

/// Word -> first listed pronunciation. Accepts both the classic
/// "WORD  PH1 PH2" layout and the lowercase "word ph1 ph2" distribution;
/// alternates such as "READ(1)" are skipped and ";;;" lines are comments.
class PronouncingDictionary {
 public:
  PronouncingDictionary() = default;

  static PronouncingDictionary load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open pronouncing dictionary " + path.string());
    return parse(in);
  }

  static PronouncingDictionary parse(std::istream& in) {
    PronouncingDictionary dict;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line.starts_with(";;;")) continue;
      if (auto hash = line.find(" #"); hash != std::string::npos) line.resize(hash);
      std::istringstream fields(line);
      std::string word;
      fields >> word;
      if (word.empty() || word.find('(') != std::string::npos) continue;
      for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (dict.entries_.contains(word)) continue;
      PhonemeSeq pron;
      bool valid = true;
      std::string sym;
      while (fields >> sym) {
        auto p = parse_phoneme(sym);
        if (!p) {
          valid = false;
          break;
        }
        pron.push_back(*p);
      }
      if (valid && !pron.empty()) dict.entries_.emplace(std::move(word), std::move(pron));
    }
    return dict;
  }

  void add(std::string word, PhonemeSeq pron) { entries_.insert_or_assign(std::move(word), std::move(pron)); }

  const PhonemeSeq* find(const std::string& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? nullptr : &it->second;
  }
  bool contains(const std::string& word) const { return entries_.contains(word); }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::unordered_map<std::string, PhonemeSeq> entries_;
};

// ---------------------------------------------------------------------------
// Numbers
// ---------------------------------------------------------------------------

/// Spells a digit string as English words ("42" -> "forty two"). Strings
/// longer than twelve digits are read digit by digit.
inline std::string number_to_words(std::string_view digits) {
  static constexpr std::array<std::string_view, 20> kOnes = {
      "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
      "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
  static constexpr std::array<std::string_view, 10> kTens = {
      "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};
  if (digits.empty()) return {};
  if (digits.size() > 12) {
    std::string out;
    for (char d : digits) {
      if (!out.empty()) out.push_back(' ');
      out += kOnes[static_cast<std::size_t>(d - '0')];
    }
    return out;
  }
  std::uint64_t value = 0;
  for (char d : digits) value = value * 10 + static_cast<std::uint64_t>(d - '0');
  if (value == 0) return "zero";

  auto below_thousand = [&](std::uint64_t v) {
    std::string out;
    if (v >= 100) {
      out += kOnes[v / 100];
      out += " hundred";
      v %= 100;
      if (v) out.push_back(' ');
    }
    if (v >= 20) {
      out += kTens[v / 10];
      if (v % 10) {
        out.push_back(' ');
        out += kOnes[v % 10];
      }
    } else if (v > 0) {
      out += kOnes[v];
    }
    return out;
  };
  static constexpr std::array<std::pair<std::uint64_t, std::string_view>, 3> kScales = {
      {{1'000'000'000ULL, "billion"}, {1'000'000ULL, "million"}, {1'000ULL, "thousand"}}};
  std::string out;
  for (const auto& [scale, name] : kScales) {
    if (value >= scale) {
      if (!out.empty()) out.push_back(' ');
      out += below_thousand(value / scale);
      out.push_back(' ');
      out += name;
      value %= scale;
    }
  }
  if (value) {
    if (!out.empty()) out.push_back(' ');
    out += below_thousand(value);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Letter-to-sound fallback
// ---------------------------------------------------------------------------

namespace detail {

struct LtsRule {
  std::string_view graphemes;
  std::string_view phonemes;
  bool word_initial_only = false;
};

// Longest match wins; order within equal lengths is priority order.
inline constexpr std::array<LtsRule, 72> kLtsRules = {{
    {"tion", "SH AH N"}, {"sion", "ZH AH N"}, {"ough", "AO"}, {"augh", "AO"}, {"eigh", "EY"},
    {"igh", "AY"}, {"tch", "CH"}, {"dge", "JH"}, {"sch", "S K"},
    {"ch", "CH"}, {"sh", "SH"}, {"th", "TH"}, {"ph", "F"}, {"wh", "W"}, {"ck", "K"},
    {"ng", "NG"}, {"gh", ""}, {"qu", "K W"}, {"kn", "N", true}, {"wr", "R", true},
    {"ee", "IY"}, {"ea", "IY"}, {"oo", "UW"}, {"ou", "AW"}, {"ow", "OW"}, {"oa", "OW"},
    {"oi", "OY"}, {"oy", "OY"}, {"ai", "EY"}, {"ay", "EY"}, {"au", "AO"}, {"aw", "AO"},
    {"ew", "UW"}, {"ie", "IY"}, {"ei", "IY"}, {"ey", "IY"},
    {"ar", "AA R"}, {"er", "ER"}, {"ir", "ER"}, {"ur", "ER"}, {"or", "AO R"},
    {"ss", "S"}, {"ll", "L"}, {"tt", "T"}, {"ff", "F"}, {"pp", "P"}, {"bb", "B"}, {"dd", "D"},
    {"gg", "G"}, {"mm", "M"}, {"nn", "N"}, {"rr", "R"}, {"zz", "Z"}, {"cc", "K"},
    {"b", "B"}, {"d", "D"}, {"f", "F"}, {"h", "HH"}, {"j", "JH"}, {"k", "K"}, {"l", "L"},
    {"m", "M"}, {"n", "N"}, {"p", "P"}, {"q", "K"}, {"r", "R"}, {"s", "S"}, {"t", "T"},
    {"v", "V"}, {"w", "W"}, {"x", "K S"}, {"z", "Z"},
}};

inline bool is_vowel_letter(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

inline void append_symbols(PhonemeSeq& out, std::string_view symbols) {
  std::size_t pos = 0;
  while (pos < symbols.size()) {
    auto end = symbols.find(' ', pos);
    if (end == std::string_view::npos) end = symbols.size();
    if (end > pos) {
      if (auto p = parse_phoneme(symbols.substr(pos, end - pos))) out.push_back(*p);
    }
    pos = end + 1;
  }
}

}  // namespace detail

/// Deterministic rule-based pronunciation for a lowercase word. Handles
/// common digraphs, soft c/g, word-final silent e with the preceding vowel
/// made long, and y as consonant/vowel by position. Non-letters are ignored.
inline PhonemeSeq letter_to_sound(std::string_view raw) {
  std::string w;
  for (char c : raw) {
    if (std::isalpha(static_cast<unsigned char>(c))) w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  PhonemeSeq out;
  const std::size_t n = w.size();
  const bool silent_final_e = n > 2 && w[n - 1] == 'e' && !detail::is_vowel_letter(w[n - 2]);
  std::size_t i = 0;
  while (i < n) {
    // Vowels and context-dependent letters first.
    const char c = w[i];
    const char next = i + 1 < n ? w[i + 1] : '\0';
    if (c == 'e' && i == n - 1 && silent_final_e) {
      ++i;
      continue;
    }
    bool matched = false;
    for (std::size_t len = 4; len >= 2 && !matched; --len) {
      if (i + len > n) continue;
      const std::string_view piece(w.data() + i, len);
      for (const auto& rule : detail::kLtsRules) {
        if (rule.graphemes.size() != len || rule.graphemes != piece) continue;
        if (rule.word_initial_only && i != 0) continue;
        detail::append_symbols(out, rule.phonemes);
        i += len;
        matched = true;
        break;
      }
    }
    if (matched) continue;

    // Long vowel before consonant + silent final e ("make", "time").
    const bool magic_e = silent_final_e && i + 2 == n - 1 && !detail::is_vowel_letter(next);
    switch (c) {
      case 'a': out.push_back(magic_e ? Phoneme::EY : Phoneme::AE); break;
      case 'e': out.push_back(magic_e ? Phoneme::IY : Phoneme::EH); break;
      case 'i': out.push_back(magic_e ? Phoneme::AY : Phoneme::IH); break;
      case 'o': out.push_back(magic_e ? Phoneme::OW : Phoneme::AA); break;
      case 'u': out.push_back(magic_e ? Phoneme::UW : Phoneme::AH); break;
      case 'y':
        if (i == 0) out.push_back(Phoneme::Y);
        else out.push_back(i == n - 1 ? Phoneme::IY : Phoneme::IH);
        break;
      case 'c': out.push_back(next == 'e' || next == 'i' || next == 'y' ? Phoneme::S : Phoneme::K); break;
      case 'g': out.push_back(next == 'e' || next == 'i' || next == 'y' ? Phoneme::JH : Phoneme::G); break;
      default:
        for (const auto& rule : detail::kLtsRules) {
          if (rule.graphemes.size() == 1 && rule.graphemes[0] == c) {
            detail::append_symbols(out, rule.phonemes);
            break;
          }
        }
    }
    ++i;
  }
  return out;
}

}  // namespace pispin
