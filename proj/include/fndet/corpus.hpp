#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fndet {

enum class Label { Real = 0, Fake = 1 };

std::string to_string(Label label);
// Case-insensitive parse of "real"/"fake"; nullopt for anything else.
std::optional<Label> parse_label(const std::string& text);

// One labeled social-media post. `text` is the raw tweet body; `label` is
// absent for unlabeled inference data.
struct TweetRecord {
  std::string id;
  std::string text;
  std::optional<Label> label;
};

struct DatasetSplit {
  std::vector<TweetRecord> train;
  std::vector<TweetRecord> test;
  std::uint64_t seed = 0;
  double ratio = 0.9;
};

// Reads a comma-separated file with a header row containing `id` and `tweet`
// columns (plus `label` when has_labels). Quoted fields may contain commas
// and newlines. Throws SchemaError / RowError / EmptyCorpusError.
std::vector<TweetRecord> load_csv(const std::filesystem::path& path, bool has_labels);

// Concatenates per-file record lists. Ids that collide across files are
// disambiguated by prefixing "<tag>:"; a residual duplicate id is an error.
std::vector<TweetRecord> merge_records(
    const std::vector<std::pair<std::string, std::vector<TweetRecord>>>& tagged_lists);

// Seed-driven shuffle then split; |train| = round-half-up(ratio * N).
// Every record must be labeled.
DatasetSplit merge_and_split(std::vector<TweetRecord> records, double ratio,
                             std::uint64_t seed);

std::map<Label, std::size_t> label_counts(const std::vector<TweetRecord>& records);

}  // namespace fndet
