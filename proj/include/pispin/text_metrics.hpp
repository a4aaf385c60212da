#pragma once

// Textual metrics: lemma sets and lexical deviation, phoneme transcripts and
// lengths, phoneme edit distance, listener recognition rates (Sent-Int), and
// pairwise ratios.

#include <pispin/csv.hpp>
#include <pispin/error.hpp>
#include <pispin/phonemes.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#ifndef PISPIN_DATA_DIR
#define PISPIN_DATA_DIR "data"
#endif

namespace pispin {

/// Directory holding cmudict.dict and lemma_lookup.tsv. The PISPIN_DATA_DIR
/// environment variable overrides the compiled-in location.
inline std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("PISPIN_DATA_DIR"); env && *env) return env;
  return PISPIN_DATA_DIR;
}

/// Lowercases, turns every character other than letters, digits and
/// word-internal apostrophes into a separator, and splits.
inline std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.front() == '\'') cur.erase(cur.begin());
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (ch == '\'') {
      cur.push_back(ch);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Lemmatizer
// ---------------------------------------------------------------------------

/// Maps an inflected lowercase word to its lemma. Lookup order: a small
/// built-in irregular table, the form->lemma lexicon, then suffix rules whose
/// candidates are accepted only when they are known words.
class Lemmatizer {
 public:
  Lemmatizer() = default;

  static Lemmatizer load(const std::filesystem::path& lexicon_path) {
    std::ifstream in(lexicon_path);
    if (!in) throw io_error("cannot open lemma lexicon " + lexicon_path.string());
    Lemmatizer lem;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) continue;
      lem.add(line.substr(0, tab), line.substr(tab + 1));
    }
    return lem;
  }

  void add(std::string form, std::string lemma) {
    known_.insert(lemma);
    known_.insert(form);
    lexicon_.insert_or_assign(std::move(form), std::move(lemma));
  }

  /// Extra words accepted as valid suffix-rule results.
  void set_vocabulary(const PronouncingDictionary* vocabulary) { vocabulary_ = vocabulary; }

  std::string lemma(const std::string& word) const {
    if (auto it = irregular().find(word); it != irregular().end()) return std::string(it->second);
    if (auto it = lexicon_.find(word); it != lexicon_.end()) return it->second;
    if (auto rule = by_suffix_rules(word)) return *rule;
    return word;
  }

  std::size_t size() const noexcept { return lexicon_.size(); }

 private:
  static const std::unordered_map<std::string_view, std::string_view>& irregular() {
    static const std::unordered_map<std::string_view, std::string_view> table = {
        {"am", "be"},       {"is", "be"},         {"are", "be"},      {"was", "be"},     {"were", "be"},
        {"been", "be"},     {"being", "be"},      {"'m", "be"},       {"has", "have"},   {"had", "have"},
        {"having", "have"}, {"does", "do"},       {"did", "do"},      {"done", "do"},    {"doing", "do"},
        {"went", "go"},     {"gone", "go"},       {"goes", "go"},     {"men", "man"},    {"women", "woman"},
        {"children", "child"}, {"people", "person"}, {"feet", "foot"}, {"teeth", "tooth"}, {"mice", "mouse"},
        {"geese", "goose"}, {"better", "good"},   {"best", "good"},   {"worse", "bad"},  {"worst", "bad"},
        {"said", "say"},    {"made", "make"},     {"took", "take"},   {"taken", "take"}, {"came", "come"},
        {"saw", "see"},     {"seen", "see"},      {"got", "get"},     {"gotten", "get"}, {"knew", "know"},
        {"known", "know"},  {"thought", "think"}, {"told", "tell"},   {"found", "find"}, {"gave", "give"},
        {"given", "give"},  {"felt", "feel"},     {"left", "leave"},  {"kept", "keep"},  {"began", "begin"},
        {"begun", "begin"}, {"ran", "run"},       {"wrote", "write"}, {"written", "write"}, {"bought", "buy"},
        {"brought", "bring"}, {"spoke", "speak"}, {"spoken", "speak"}, {"ate", "eat"},   {"eaten", "eat"},
    };
    return table;
  }

  bool known(const std::string& w) const {
    return known_.contains(w) || (vocabulary_ && vocabulary_->contains(w));
  }

  std::optional<std::string> by_suffix_rules(const std::string& w) const {
    auto stem = [&](std::size_t cut) { return w.substr(0, w.size() - cut); };
    auto ends = [&](std::string_view s) { return w.size() > s.size() + 1 && w.ends_with(s); };
    std::vector<std::string> candidates;
    auto undouble = [](const std::string& s) -> std::optional<std::string> {
      if (s.size() >= 2 && s[s.size() - 1] == s[s.size() - 2]) return s.substr(0, s.size() - 1);
      return std::nullopt;
    };
    if (ends("ies")) candidates.push_back(stem(3) + "y");
    if (ends("es")) candidates.push_back(stem(2));
    if (ends("s") && !ends("ss")) candidates.push_back(stem(1));
    if (ends("ied")) candidates.push_back(stem(3) + "y");
    for (std::string_view suf : {std::string_view("ing"), std::string_view("ed"), std::string_view("est"),
                                 std::string_view("er")}) {
      if (!ends(suf)) continue;
      const std::string base = stem(suf.size());
      if (auto u = undouble(base)) candidates.push_back(*u);
      candidates.push_back(base);
      candidates.push_back(base + "e");
    }
    for (const auto& c : candidates) {
      if (c.size() >= 2 && known(c)) return c;
    }
    return std::nullopt;
  }

  std::unordered_map<std::string, std::string> lexicon_;
  std::unordered_set<std::string> known_;
  const PronouncingDictionary* vocabulary_ = nullptr;
};

/// 1 - |A n B| / |A u B|; two empty sets have deviation 0.
inline double lexical_deviation_sets(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& x : a) common += b.contains(x) ? 1 : 0;
  const std::size_t uni = a.size() + b.size() - common;
  return 1.0 - static_cast<double>(common) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Analyzer
// ---------------------------------------------------------------------------

/// Bundles the pronunciation dictionary and lemmatizer. Immutable after
/// construction and safe to share across threads.
class TextAnalyzer {
 public:
  TextAnalyzer(PronouncingDictionary dictionary, Lemmatizer lemmatizer)
      : dictionary_(std::move(dictionary)), lemmatizer_(std::move(lemmatizer)) {
    lemmatizer_.set_vocabulary(&dictionary_);
  }
  TextAnalyzer(const TextAnalyzer&) = delete;
  TextAnalyzer& operator=(const TextAnalyzer&) = delete;

  static TextAnalyzer load(const std::filesystem::path& data_dir) {
    return TextAnalyzer(PronouncingDictionary::load(data_dir / "cmudict.dict"),
                        Lemmatizer::load(data_dir / "lemma_lookup.tsv"));
  }

  /// Process-wide instance over default_data_dir(), loaded on first use.
  static const TextAnalyzer& shared() {
    static const TextAnalyzer instance = load(default_data_dir());
    return instance;
  }

  const PronouncingDictionary& dictionary() const noexcept { return dictionary_; }
  const Lemmatizer& lemmatizer() const noexcept { return lemmatizer_; }

  std::set<std::string> lemma_tokens(std::string_view text) const {
    std::set<std::string> out;
    for (const auto& tok : word_tokens(text)) out.insert(lemmatizer_.lemma(tok));
    return out;
  }

  double lexical_deviation(std::string_view a, std::string_view b) const {
    return pispin::lexical_deviation_sets(lemma_tokens(a), lemma_tokens(b));
  }

  PhonemeSeq phoneme_transcript(std::string_view text) const {
    PhonemeSeq out;
    for (const auto& tok : word_tokens(text)) append_word(out, tok);
    return out;
  }

  std::size_t ph_len(std::string_view text) const { return phoneme_transcript(text).size(); }

 private:
  void append_word(PhonemeSeq& out, const std::string& word) const {
    if (const auto* p = dictionary_.find(word)) {
      out.insert(out.end(), p->begin(), p->end());
      return;
    }
    // Split mixed tokens like "4th" or "mp3" into letter and digit runs.
    std::size_t i = 0;
    while (i < word.size()) {
      const bool digit = std::isdigit(static_cast<unsigned char>(word[i]));
      std::size_t j = i;
      while (j < word.size() && (std::isdigit(static_cast<unsigned char>(word[j])) != 0) == digit) ++j;
      const std::string run = word.substr(i, j - i);
      if (digit) {
        for (const auto& w : word_tokens(number_to_words(run))) append_word(out, w);
      } else if (const auto* p = dictionary_.find(run)) {
        out.insert(out.end(), p->begin(), p->end());
      } else {
        auto lts = letter_to_sound(run);
        out.insert(out.end(), lts.begin(), lts.end());
      }
      i = j;
    }
  }

  PronouncingDictionary dictionary_;
  Lemmatizer lemmatizer_;
};

inline std::set<std::string> lemma_tokens(std::string_view text) { return TextAnalyzer::shared().lemma_tokens(text); }
inline double lexical_deviation(std::string_view a, std::string_view b) {
  return TextAnalyzer::shared().lexical_deviation(a, b);
}
inline PhonemeSeq phoneme_transcript(std::string_view text) { return TextAnalyzer::shared().phoneme_transcript(text); }
inline std::size_t ph_len(std::string_view text) { return TextAnalyzer::shared().ph_len(text); }

// ---------------------------------------------------------------------------
// Edit distance and recognition
// ---------------------------------------------------------------------------

/// Levenshtein distance with unit costs over any two equality-comparable
/// random-access ranges. O(|a|·|b|) time, O(|b|) memory.
template <typename RangeA, typename RangeB>
std::size_t edit_distance(const RangeA& a, const RangeB& b) {
  const std::size_t n = std::size(a), m = std::size(b);
  std::vector<std::size_t> row(m + 1);
  for (std::size_t j = 0; j <= m; ++j) row[j] = j;
  auto ai = std::begin(a);
  for (std::size_t i = 1; i <= n; ++i, ++ai) {
    std::size_t diag = row[0];
    row[0] = i;
    auto bj = std::begin(b);
    for (std::size_t j = 1; j <= m; ++j, ++bj) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (*ai == *bj ? 0 : 1)});
      diag = up;
    }
  }
  return row[m];
}

inline double recognition_rate(const PhonemeSeq& reference, const PhonemeSeq& hypothesis) {
  if (reference.empty()) throw data_error("recognition_rate: empty reference");
  const double d = static_cast<double>(edit_distance(reference, hypothesis));
  return std::max(0.0, 1.0 - d / static_cast<double>(reference.size()));
}

struct TranscriptRecord {
  std::string utterance_id;
  std::string listener_id;
  std::string transcript;
};

/// Mean phoneme recognition rate of the listeners' transcripts.
inline double sent_int(std::string_view reference_text, const std::vector<TranscriptRecord>& transcripts,
                       const TextAnalyzer& analyzer = TextAnalyzer::shared()) {
  if (transcripts.empty()) throw data_error("sent_int: no transcripts");
  const PhonemeSeq ref = analyzer.phoneme_transcript(reference_text);
  if (ref.empty()) throw data_error("sent_int: reference has no phonemes");
  double sum = 0.0;
  for (const auto& t : transcripts) sum += recognition_rate(ref, analyzer.phoneme_transcript(t.transcript));
  return sum / static_cast<double>(transcripts.size());
}

inline double pwr(double out_value, double in_value) {
  if (!(in_value > 0.0)) throw data_error("pwr: denominator must be positive");
  return out_value / in_value;
}

/// Reads `utterance_id,listener_id,transcript` CSV.
inline std::vector<TranscriptRecord> read_transcripts_csv(const std::filesystem::path& path) {
  const auto rows = csv::read_with_header(path, {"utterance_id", "listener_id", "transcript"});
  std::vector<TranscriptRecord> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i][0].empty()) throw data_error(path.string() + ": row " + std::to_string(i + 2) + " has empty utterance_id");
    out.push_back({rows[i][0], rows[i][1], rows[i][2]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pair metrics
// ---------------------------------------------------------------------------

/// Every metric of one input/output pair. PWR fields are out/in.
struct PairMetrics {
  double sts = 0.0;
  double ld = 0.0;
  std::size_t phlen_in = 0, phlen_out = 0;
  double ppl_in = 0.0, ppl_out = 0.0;
  double stoi_in = 0.0, stoi_out = 0.0;
  double pwr_phlen = 0.0, pwr_ppl = 0.0, pwr_stoi = 0.0;
  std::optional<double> sent_int_in, sent_int_out, pwr_sent_int;

  /// Fills the PWR fields from the absolute values.
  void compute_ratios() {
    pwr_phlen = pwr(static_cast<double>(phlen_out), static_cast<double>(phlen_in));
    pwr_ppl = pwr(ppl_out, ppl_in);
    pwr_stoi = pwr(stoi_out, stoi_in);
    if (sent_int_in && sent_int_out) pwr_sent_int = pwr(*sent_int_out, *sent_int_in);
  }
};

/// Numeric metric by report name; throws data_error on an unknown name.
inline double metric_value(const PairMetrics& m, std::string_view key) {
  if (key == "sts") return m.sts;
  if (key == "ld") return m.ld;
  if (key == "phlen_in") return static_cast<double>(m.phlen_in);
  if (key == "phlen_out") return static_cast<double>(m.phlen_out);
  if (key == "ppl_in") return m.ppl_in;
  if (key == "ppl_out") return m.ppl_out;
  if (key == "stoi_in") return m.stoi_in;
  if (key == "stoi_out") return m.stoi_out;
  if (key == "pwr_phlen") return m.pwr_phlen;
  if (key == "pwr_ppl") return m.pwr_ppl;
  if (key == "pwr_stoi") return m.pwr_stoi;
  auto optional_field = [&](const std::optional<double>& v) {
    if (!v) throw data_error(std::string(key) + " not available for this row");
    return *v;
  };
  if (key == "sent_int_in") return optional_field(m.sent_int_in);
  if (key == "sent_int_out") return optional_field(m.sent_int_out);
  if (key == "pwr_sent_int") return optional_field(m.pwr_sent_int);
  throw data_error("unknown metric '" + std::string(key) + "'");
}

}  // namespace pispin
