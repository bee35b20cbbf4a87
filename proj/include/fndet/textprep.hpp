#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fndet/corpus.hpp"

namespace fndet {

// Vocabulary plus special-token ids and the fixed sequence length.
// Vocabulary files use the published one-subword-per-line format where the
// line number is the id.
struct TokenizerSpec {
  std::unordered_map<std::string, int> vocab;
  int cls_id = -1;  // sequence start
  int sep_id = -1;  // sequence end
  int pad_id = -1;
  int unk_id = -1;
  int max_len = 512;
  bool lowercase = true;  // uncased convention by default

  static TokenizerSpec from_vocab_file(const std::filesystem::path& path,
                                       int max_len = 512, bool lowercase = true);
  // The four special ids must be present and pairwise distinct.
  void validate() const;
  int vocab_size() const { return static_cast<int>(vocab.size()); }
};

// Fixed-length encoder input. All three vectors/fields obey:
// token_ids[0] == cls, exactly one sep among mask==1 positions, mask is a
// block of 1s followed by 0s, and pad positions hold pad_id.
struct EncodedExample {
  std::vector<int> token_ids;
  std::vector<int> attention_mask;
  std::optional<Label> label;
};

// Whitespace/punctuation pre-split followed by greedy longest-match
// wordpiece. Continuation pieces carry the "##" prefix. Fragments with no
// vocabulary match are returned verbatim and map to unk at encode time.
std::vector<std::string> tokenize(const std::string& text, const TokenizerSpec& spec);

// cls + text pieces + sep, truncated from the tail to max_len (start and
// end tokens always survive), padded with pad_id / mask 0.
EncodedExample encode(const std::string& text, const TokenizerSpec& spec,
                      std::optional<Label> label = std::nullopt);

std::vector<EncodedExample> encode_records(const std::vector<TweetRecord>& records,
                                           const TokenizerSpec& spec);

// Pre-padding token lengths (special tokens included, no truncation).
std::map<std::size_t, std::size_t> length_histogram(const std::vector<TweetRecord>& records,
                                                    const TokenizerSpec& spec);

// Number of histogram entries whose length exceeds max_len.
std::size_t count_over_length(const std::map<std::size_t, std::size_t>& histogram,
                              std::size_t max_len);

}  // namespace fndet
