#pragma once

// Dataset preparation, subsets, transcript scoring, and report rendering.

#include <pispin/csv.hpp>
#include <pispin/error.hpp>
#include <pispin/stats.hpp>
#include <pispin/text_metrics.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace pispin {

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view strip_ws(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline std::size_t count_words(std::string_view line) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : line) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

/// Trims each line and keeps those with min_words..max_words whitespace
/// tokens, in order.
inline std::vector<std::string> filter_dataset(const std::vector<std::string>& lines, std::size_t min_words,
                                               std::size_t max_words) {
  if (min_words > max_words) throw data_error("min_words exceeds max_words", "dataset");
  std::vector<std::string> out;
  for (const auto& raw : lines) {
    const std::string line(detail::strip_ws(raw));
    const std::size_t n = count_words(line);
    if (n >= min_words && n <= max_words) out.push_back(line);
  }
  return out;
}

struct DatasetItem {
  std::string id;
  std::string text;
};

struct DatasetOptions {
  std::size_t head_lines = 0;  // 0 keeps every line
  std::size_t min_words = 10;
  std::size_t max_words = 12;
};

/// Reads a dataset: CSV with header `id,text` when the extension is .csv,
/// otherwise one sentence per line with the 1-based line number as id.
/// `head_lines` truncates before the word-count filter.
inline std::vector<DatasetItem> load_dataset(const std::filesystem::path& path, const DatasetOptions& options = {}) {
  std::vector<DatasetItem> raw;
  if (path.extension() == ".csv") {
    for (auto& row : csv::read_with_header(path, {"id", "text"})) {
      if (row[0].empty()) throw data_error(path.string() + ": empty id", "dataset");
      raw.push_back({std::move(row[0]), std::move(row[1])});
    }
  } else {
    std::istringstream in(csv::read_text(path));
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      raw.push_back({std::to_string(no), line});
    }
  }
  if (options.head_lines > 0 && raw.size() > options.head_lines) raw.resize(options.head_lines);

  std::vector<DatasetItem> out;
  std::map<std::string, int> seen;
  for (auto& item : raw) {
    if (filter_dataset({item.text}, options.min_words, options.max_words).empty()) continue;
    if (seen[item.id]++) throw data_error(path.string() + ": duplicate id '" + item.id + "'", "dataset");
    out.push_back({item.id, std::string(detail::strip_ws(item.text))});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subsets
// ---------------------------------------------------------------------------

/// Indices of the k largest values, descending; equal values keep their
/// original order.
inline std::vector<std::size_t> top_k_indices(const std::vector<double>& values, std::size_t k) {
  if (k > values.size()) throw data_error("k exceeds the number of rows", "subset");
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  idx.resize(k);
  return idx;
}

/// Uniform k-subset of 0..n-1 (partial Fisher-Yates on a seeded
/// mt19937_64), returned in ascending order. The bounded draw is done here
/// rather than with std::uniform_int_distribution so that subsets are the
/// same on every standard library.
inline std::vector<std::size_t> random_k_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k > n) throw data_error("k exceeds the number of rows", "subset");
  std::mt19937_64 gen(seed);
  auto bounded = [&](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do x = gen();
    while (x >= limit);
    return x % bound;
  };
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + bounded(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& rows, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(rows[i]);
  return out;
}

inline std::vector<PairMetrics> subset_top_k(const std::vector<PairMetrics>& rows, std::size_t k,
                                             std::string_view key = "pwr_stoi") {
  std::vector<double> values;
  for (const auto& r : rows) values.push_back(metric_value(r, key));
  return pick(rows, top_k_indices(values, k));
}

inline std::vector<PairMetrics> subset_random_k(const std::vector<PairMetrics>& rows, std::size_t k, std::uint64_t seed) {
  return pick(rows, random_k_indices(rows.size(), k, seed));
}

// ---------------------------------------------------------------------------
// Listening-test transcripts
// ---------------------------------------------------------------------------

struct TranscriptScores {
  std::map<std::string, double> sent_int;
  std::vector<std::string> warnings;
};

/// Groups transcripts by utterance and scores each group. Groups without
/// exactly `expected_listeners` transcripts are scored with a warning.
inline TranscriptScores score_transcripts(const std::map<std::string, std::string>& references,
                                          const std::vector<TranscriptRecord>& transcripts,
                                          std::size_t expected_listeners = 6,
                                          const TextAnalyzer& analyzer = TextAnalyzer::shared()) {
  std::map<std::string, std::vector<TranscriptRecord>> groups;
  for (const auto& t : transcripts) {
    if (!references.contains(t.utterance_id)) {
      throw data_error("transcript for unknown utterance '" + t.utterance_id + "'", "transcripts");
    }
    groups[t.utterance_id].push_back(t);
  }
  TranscriptScores out;
  for (const auto& [id, group] : groups) {
    if (group.size() != expected_listeners) {
      out.warnings.push_back("utterance '" + id + "' has " + std::to_string(group.size()) + " transcripts, expected " +
                             std::to_string(expected_listeners));
    }
    try {
      out.sent_int[id] = sent_int(references.at(id), group, analyzer);
    } catch (const Error& e) {
      throw data_error("utterance '" + id + "': " + e.message(), "transcripts");
    }
  }
  return out;
}

/// Reads `id,text` reference CSV.
inline std::map<std::string, std::string> read_references_csv(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (auto& row : csv::read_with_header(path, {"utterance_id", "text"})) {
    if (row[0].empty()) throw data_error(path.string() + ": empty utterance_id", "references");
    if (!out.emplace(row[0], row[1]).second) {
      throw data_error(path.string() + ": duplicate utterance_id '" + row[0] + "'", "references");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One prompt condition evaluated over a dataset.
struct EvalRun {
  std::string condition_id;
  std::vector<std::string> ids;  // parallel to rows
  std::vector<PairMetrics> rows;
  std::string noise_label = "babble";
  double snr_db = -5.0;
  std::uint64_t seed = 0;
};

enum class ReportFormat { tsv, markdown };

namespace detail {

inline std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::vector<double> column(const std::vector<PairMetrics>& rows, std::string_view key) {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(metric_value(r, key));
  return v;
}

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Mean to 3 decimals, "*" when the t-test against 1.0 gives p < 0.05.
inline std::string ratio_cell(const std::vector<double>& v) {
  const auto s = stats::aggregate(v);
  return fmt3(s.mean) + (s.significant(0.05) ? "*" : "");
}

class TableWriter {
 public:
  explicit TableWriter(ReportFormat f) : format_(f) {}

  void row(const std::vector<std::string>& cells, bool header = false) {
    if (format_ == ReportFormat::tsv) {
      for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "\t" : "") << cells[i];
      out_ << '\n';
      return;
    }
    out_ << '|';
    for (const auto& c : cells) out_ << ' ' << c << " |";
    out_ << '\n';
    if (header) {
      out_ << '|';
      for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "---:|" : "---|");
      out_ << '\n';
    }
  }
  void title(const std::string& text) {
    out_ << (format_ == ReportFormat::tsv ? "\n# " : "\n### ") << text << "\n";
    if (format_ == ReportFormat::markdown) out_ << '\n';
  }
  void note(const std::string& text) { out_ << (format_ == ReportFormat::tsv ? "# " : "") << text << '\n'; }
  std::string str() const { return out_.str(); }

 private:
  ReportFormat format_;
  std::ostringstream out_;
};

}  // namespace detail

/// Renders the metric tables. The first row is always the ratio table
/// header; absolute scores follow, then listening-test subsets when any row
/// carries Sent-Int values.
inline std::string render_report(const std::vector<EvalRun>& runs, ReportFormat format, std::size_t subset_k = 30) {
  detail::TableWriter w(format);
  if (format == ReportFormat::markdown) {
    w.note("### Pairwise ratios");
    w.note("");
  }
  w.row({"condition", "STS", "LD", "PWR-PhLen", "PWR-PPL", "PWR-STOI"}, true);
  for (const auto& run : runs) {
    if (run.rows.empty()) {
      w.row({run.condition_id, "n/a", "n/a", "n/a", "n/a", "n/a"});
      continue;
    }
    using detail::column;
    w.row({run.condition_id, detail::fmt3(detail::mean_of(column(run.rows, "sts"))),
           detail::fmt3(detail::mean_of(column(run.rows, "ld"))), detail::ratio_cell(column(run.rows, "pwr_phlen")),
           detail::ratio_cell(column(run.rows, "pwr_ppl")), detail::ratio_cell(column(run.rows, "pwr_stoi"))});
  }

  w.title("Absolute scores");
  w.row({"condition", "PhLen", "PPL", "STOI"}, true);
  const EvalRun* first = nullptr;
  for (const auto& run : runs) {
    if (!run.rows.empty()) {
      first = &run;
      break;
    }
  }
  if (first) {
    using detail::column;
    w.row({"input", detail::fmt3(detail::mean_of(column(first->rows, "phlen_in"))),
           detail::fmt3(detail::mean_of(column(first->rows, "ppl_in"))),
           detail::fmt3(detail::mean_of(column(first->rows, "stoi_in")))});
  }
  for (const auto& run : runs) {
    if (run.rows.empty()) continue;
    using detail::column;
    w.row({run.condition_id, detail::fmt3(detail::mean_of(column(run.rows, "phlen_out"))),
           detail::fmt3(detail::mean_of(column(run.rows, "ppl_out"))),
           detail::fmt3(detail::mean_of(column(run.rows, "stoi_out")))});
  }

  std::vector<std::string> correlation_notes;
  bool any_sent_int = false;
  for (const auto& run : runs) {
    for (const auto& r : run.rows) any_sent_int = any_sent_int || r.pwr_sent_int.has_value();
  }
  if (any_sent_int) {
    w.title("Listening test");
    w.row({"subset", "n", "STOI-in", "PWR-STOI", "Sent-Int-in", "Sent-Int-out", "PWR-Sent-Int"}, true);
    for (const auto& run : runs) {
      std::vector<PairMetrics> scored;
      for (const auto& r : run.rows) {
        if (r.pwr_sent_int) scored.push_back(r);
      }
      if (scored.empty()) continue;
      const std::size_t k = std::min(subset_k, scored.size());
      auto emit = [&](const std::string& name, const std::vector<PairMetrics>& rows) {
        using detail::column;
        w.row({run.condition_id + "/" + name, std::to_string(rows.size()),
               detail::fmt3(detail::mean_of(column(rows, "stoi_in"))), detail::ratio_cell(column(rows, "pwr_stoi")),
               detail::fmt3(detail::mean_of(column(rows, "sent_int_in"))),
               detail::fmt3(detail::mean_of(column(rows, "sent_int_out"))),
               detail::ratio_cell(column(rows, "pwr_sent_int"))});
      };
      emit("top_" + std::to_string(k), subset_top_k(scored, k, "pwr_stoi"));
      emit("random_" + std::to_string(k), subset_random_k(scored, k, run.seed));
      if (scored.size() >= 3) {
        try {
          const auto c = stats::pearson(detail::column(scored, "stoi_in"), detail::column(scored, "pwr_sent_int"));
          char buf[160];
          std::snprintf(buf, sizeof buf, "%s: Pearson r(STOI-in, PWR-Sent-Int) = %.3f, p = %.3g, n = %zu",
                        run.condition_id.c_str(), c.r, c.p_value, c.n);
          correlation_notes.emplace_back(buf);
        } catch (const Error& e) {
          correlation_notes.push_back(run.condition_id + ": Pearson r not computed (" + e.message() + ")");
        }
      }
    }
  }

  w.title("Notes");
  for (const auto& n : correlation_notes) w.note(n);
  if (!runs.empty()) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "noise = %s, SNR = %.2f dB, seed = %llu", runs.front().noise_label.c_str(),
                  runs.front().snr_db, static_cast<unsigned long long>(runs.front().seed));
    w.note(buf);
  }
  w.note("* = one-sample two-sided Student t-test of the mean ratio against 1.0, p < 0.05");
  w.note("mixtures are scored unclipped; listening WAVs share one peak-normalization gain per pair");
  w.note("absolute input row taken from the first condition");
  return w.str();
}

}  // namespace pispin
