#pragma once

// Prompt recipes and parsing of numbered candidate lists out of an LLM reply.

#include <pispin/error.hpp>

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace pispin {

enum class PromptId { zsl_low, zsl_med, zsl_high, pas_n, icl };

inline constexpr std::string_view kInputSlot = "{input text}";
inline constexpr std::string_view kCountSlot = "{n}";

struct PromptTemplate {
  PromptId id;
  std::string_view name;
  std::string_view body;
  bool multi_candidate = false;  // body carries the {n} slot
};

inline constexpr std::string_view kIclBody =
    "Look at the samples of a sentence and its intelligible paraphrase:\n"
    "1. I don't know if you are familiar with that. => I have no idea if you're familiar with that.\n"
    "2. what other long-range goals do you have besides college? => Apart from college, what are your "
    "other long-term objectives?\n"
    "3. I don't have access either. Although, I did at one time => In the past, I had access,  but "
    "currently,  I don't.\n"
    "4. Right now I've got it narrowed down to the top four teams. => At this point, I've trimmed my "
    "options and picked 4 top teams.\n"
    "5. prohibition didn't stop it and didn't do anything really. => It continued despite the "
    "prohibition, which didn't accomplish anything.\n"
    "Similarly, generate an intelligible paraphrase for the input sentence: {input text}";

inline constexpr std::array<PromptTemplate, 5> kPromptTemplates = {{
    {PromptId::zsl_low, "zsl_low", "Generate an intelligible paraphrase for the following input sentence: {input text}"},
    {PromptId::zsl_med, "zsl_med",
     "Generate a simple, intelligible, and spoken-styled paraphrase with 10-12 words for the following input "
     "sentence: {input text}"},
    {PromptId::zsl_high, "zsl_high",
     "For a noisy listening environment with babble noise at SNR -5, generate a simple, intelligible, and "
     "spoken-styled paraphrase with 10-12 words, for the following input sentence: {input text}"},
    {PromptId::pas_n, "pas_n",
     "Generate {n} simple, intelligible, and spoken-styled paraphrases with 10-12 words for the given input "
     "sentence: {input text}",
     true},
    {PromptId::icl, "icl", kIclBody},
}};

inline const PromptTemplate& prompt_template(PromptId id) {
  return kPromptTemplates[static_cast<std::size_t>(id)];
}

inline PromptId parse_prompt_id(std::string_view name) {
  for (const auto& t : kPromptTemplates) {
    if (t.name == name) return t.id;
  }
  throw data_error("unknown prompt template '" + std::string(name) + "'", "config");
}

inline std::string_view to_string(PromptId id) { return prompt_template(id).name; }

namespace detail {

inline void replace_slot(std::string& text, std::string_view slot, std::string_view value, std::string_view name) {
  const auto pos = text.find(slot);
  if (pos == std::string::npos) {
    throw data_error("template '" + std::string(name) + "' has no " + std::string(slot) + " slot", "prompt");
  }
  text.replace(pos, slot.size(), value);
}

}  // namespace detail

/// Substitutes the slots of `tmpl`. The {n} slot is filled only for
/// multi-candidate templates; `n` is ignored otherwise.
inline std::string render_prompt(const PromptTemplate& tmpl, std::string_view input_text, int n = 1) {
  if (input_text.empty()) throw data_error("input text is empty", "prompt");
  if (n < 1) throw data_error("candidate count must be positive", "prompt");
  std::string out(tmpl.body);
  // Count first so that an input containing "{input text}" is left alone.
  if (tmpl.multi_candidate) detail::replace_slot(out, kCountSlot, std::to_string(n), tmpl.name);
  detail::replace_slot(out, kInputSlot, input_text, tmpl.name);
  return out;
}

/// Prompt actually sent for a condition: the multi-candidate recipe with
/// n = 1 collapses to the single-paraphrase medium prompt.
inline std::string render_condition_prompt(PromptId id, std::string_view input_text, int n) {
  if (id == PromptId::pas_n && n == 1) return render_prompt(prompt_template(PromptId::zsl_med), input_text);
  return render_prompt(prompt_template(id), input_text, n);
}

/// Fewer candidates were found than requested. Callers may regenerate.
class ParseShortfall : public Error {
 public:
  ParseShortfall(std::size_t found, std::size_t expected)
      : Error(ErrorKind::remote, "parse",
              "expected " + std::to_string(expected) + " candidates, parsed " + std::to_string(found)),
        found_(found) {}
  std::size_t found() const noexcept { return found_; }

 private:
  std::size_t found_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool strip_prefix(std::string_view& s, std::string_view p) {
  if (!s.starts_with(p)) return false;
  s.remove_prefix(p.size());
  return true;
}

// Removes one layer of matching ASCII or typographic quotes.
inline std::string_view strip_quotes(std::string_view s) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 3> kPairs = {
      {{"\"", "\""}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"'", "'"}}};
  for (const auto& [open, close] : kPairs) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
      s.remove_prefix(open.size());
      s.remove_suffix(close.size());
      return trim(s);
    }
  }
  return s;
}

}  // namespace detail

/// Splits an LLM reply into candidate paraphrases: strips "12." / "3)"
/// enumeration, "-" / "*" bullets and surrounding quotes, drops blank lines,
/// and keeps the first `expected_n`.
inline std::vector<std::string> parse_candidates(std::string_view llm_text, std::size_t expected_n) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= llm_text.size() && out.size() < expected_n) {
    auto end = llm_text.find('\n', pos);
    if (end == std::string_view::npos) end = llm_text.size();
    std::string_view line = detail::trim(llm_text.substr(pos, end - pos));
    pos = end + 1;

    std::size_t digits = 0;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) {
      line = detail::trim(line.substr(digits + 1));
    } else if (detail::strip_prefix(line, "-") || detail::strip_prefix(line, "*")) {
      line = detail::trim(line);
    }
    line = detail::strip_quotes(line);
    if (!line.empty()) out.emplace_back(line);
  }
  if (out.size() < expected_n) throw ParseShortfall(out.size(), expected_n);
  return out;
}

}  // namespace pispin
