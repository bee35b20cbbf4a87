#include "fndet/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "fndet/errors.hpp"

namespace fndet {

TokenizerSpec TokenizerSpec::from_vocab_file(const std::filesystem::path& path,
                                             int max_len, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary file: " + path.string());
  TokenizerSpec spec;
  spec.max_len = max_len;
  spec.lowercase = lowercase;
  std::string line;
  int id = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    spec.vocab.emplace(line, id);
    if (line == "[CLS]") spec.cls_id = id;
    else if (line == "[SEP]") spec.sep_id = id;
    else if (line == "[PAD]") spec.pad_id = id;
    else if (line == "[UNK]") spec.unk_id = id;
    ++id;
  }
  spec.validate();
  return spec;
}

void TokenizerSpec::validate() const {
  const auto present = [&](int id, const char* name) {
    if (id < 0 || id >= vocab_size())
      throw ConfigError(std::string("tokenizer: special token ") + name + " missing from vocabulary");
  };
  present(cls_id, "[CLS]");
  present(sep_id, "[SEP]");
  present(pad_id, "[PAD]");
  present(unk_id, "[UNK]");
  const int ids[4] = {cls_id, sep_id, pad_id, unk_id};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (ids[i] == ids[j]) throw ConfigError("tokenizer: special token ids must be distinct");
  if (max_len < 3) throw ConfigError("tokenizer: max_len must leave room for [CLS], one token, [SEP]");
}

namespace {

bool is_ascii_punct(unsigned char c) {
  return std::ispunct(c) != 0;
}

// Splits cleaned text into "words": runs split on whitespace, with each
// ASCII punctuation character emitted as its own word. Multi-byte UTF-8
// sequences pass through inside words untouched.
std::vector<std::string> basic_split(const std::string& text, bool lowercase) {
  std::vector<std::string> words;
  std::string current;
  const auto flush = [&]() {
    if (!current.empty()) {
      words.push_back(current);
      current.clear();
    }
  };
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && (std::isspace(c) || std::iscntrl(c))) {
      flush();
      continue;
    }
    if (c < 0x80 && is_ascii_punct(c)) {
      flush();
      words.emplace_back(1, ch);
      continue;
    }
    current.push_back(c < 0x80 && lowercase ? static_cast<char>(std::tolower(c)) : ch);
  }
  flush();
  return words;
}

constexpr std::size_t kMaxWordBytes = 100;  // longer words become a single unknown fragment

// Greedy longest-match wordpiece over one word. Pieces after the first
// carry the "##" continuation prefix. If at any point no piece matches,
// the whole word is emitted as a single raw fragment (-> unk at encode).
void wordpiece(const std::string& word, const TokenizerSpec& spec,
               std::vector<std::string>& out) {
  if (word.size() > kMaxWordBytes) {
    out.push_back(word);
    return;
  }
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    std::string match;
    while (end > start) {
      std::string candidate = word.substr(start, end - start);
      if (start > 0) candidate = "##" + candidate;
      if (spec.vocab.count(candidate)) {
        match = std::move(candidate);
        break;
      }
      --end;
    }
    if (match.empty()) {
      out.push_back(word);  // unmatchable word, kept verbatim
      return;
    }
    pieces.push_back(std::move(match));
    start = end;
  }
  out.insert(out.end(), pieces.begin(), pieces.end());
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text, const TokenizerSpec& spec) {
  std::vector<std::string> out;
  for (const std::string& word : basic_split(text, spec.lowercase))
    wordpiece(word, spec, out);
  return out;
}

EncodedExample encode(const std::string& text, const TokenizerSpec& spec,
                      std::optional<Label> label) {
  const std::vector<std::string> pieces = tokenize(text, spec);
  const auto body_budget = static_cast<std::size_t>(spec.max_len - 2);

  EncodedExample ex;
  ex.label = label;
  ex.token_ids.reserve(static_cast<std::size_t>(spec.max_len));
  ex.token_ids.push_back(spec.cls_id);
  for (std::size_t i = 0; i < pieces.size() && i < body_budget; ++i) {
    const auto it = spec.vocab.find(pieces[i]);
    ex.token_ids.push_back(it != spec.vocab.end() ? it->second : spec.unk_id);
  }
  ex.token_ids.push_back(spec.sep_id);

  ex.attention_mask.assign(ex.token_ids.size(), 1);
  ex.token_ids.resize(static_cast<std::size_t>(spec.max_len), spec.pad_id);
  ex.attention_mask.resize(static_cast<std::size_t>(spec.max_len), 0);
  return ex;
}

std::vector<EncodedExample> encode_records(const std::vector<TweetRecord>& records,
                                           const TokenizerSpec& spec) {
  std::vector<EncodedExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode(r.text, spec, r.label));
  return out;
}

std::map<std::size_t, std::size_t> length_histogram(const std::vector<TweetRecord>& records,
                                                    const TokenizerSpec& spec) {
  std::map<std::size_t, std::size_t> histogram;
  for (const auto& r : records)
    ++histogram[tokenize(r.text, spec).size() + 2];  // + [CLS], [SEP]
  return histogram;
}

std::size_t count_over_length(const std::map<std::size_t, std::size_t>& histogram,
                              std::size_t max_len) {
  std::size_t count = 0;
  for (const auto& [length, n] : histogram)
    if (length > max_len) count += n;
  return count;
}

}  // namespace fndet
