#include "fndet/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fndet/errors.hpp"
#include "fndet/nn/rng.hpp"

namespace fndet {

std::string to_string(Label label) { return label == Label::Real ? "real" : "fake"; }

std::optional<Label> parse_label(const std::string& text) {
  std::string lower;
  lower.reserve(text.size());
  for (const char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "real") return Label::Real;
  if (lower == "fake") return Label::Fake;
  return std::nullopt;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Parses one record (list of fields) starting at `pos`. Handles quoted
// fields containing commas, newlines and doubled quotes. Returns false at
// end of input.
bool next_row(const std::string& data, std::size_t& pos, std::vector<std::string>& fields) {
  fields.clear();
  if (pos >= data.size()) return false;
  std::string field;
  bool in_quotes = false;
  bool saw_any = false;
  while (pos < data.size()) {
    const char c = data[pos];
    if (in_quotes) {
      if (c == '"') {
        if (pos + 1 < data.size() && data[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
        } else {
          in_quotes = false;
          ++pos;
        }
      } else {
        field.push_back(c);
        ++pos;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      in_quotes = true;
      saw_any = true;
      ++pos;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      saw_any = true;
      ++pos;
    } else if (c == '\n' || c == '\r') {
      // Consume the line break (and a LF after CR).
      ++pos;
      if (c == '\r' && pos < data.size() && data[pos] == '\n') ++pos;
      if (!saw_any && field.empty()) continue;  // skip blank lines
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(c);
      saw_any = true;
      ++pos;
    }
  }
  if (!saw_any && field.empty()) return false;
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

std::vector<TweetRecord> load_csv(const std::filesystem::path& path, bool has_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open csv file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string data = buffer.str();

  std::size_t pos = 0;
  std::vector<std::string> fields;
  if (!next_row(data, pos, fields))
    throw EmptyCorpusError("empty corpus: " + path.string() + " has no rows");

  // Header: locate required columns case-insensitively.
  std::unordered_map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < fields.size(); ++i) columns.emplace(lower(trim(fields[i])), i);
  const auto require = [&](const std::string& name) {
    const auto it = columns.find(name);
    if (it == columns.end())
      throw SchemaError("csv " + path.string() + ": missing required column '" + name + "'");
    return it->second;
  };
  const std::size_t id_col = require("id");
  const std::size_t tweet_col = require("tweet");
  const std::size_t label_col = has_labels ? require("label") : 0;

  std::vector<TweetRecord> records;
  std::size_t row_index = 0;
  while (next_row(data, pos, fields)) {
    const std::size_t needed = std::max({id_col, tweet_col, has_labels ? label_col : std::size_t{0}});
    if (fields.size() <= needed)
      throw RowError(row_index, "expected at least " + std::to_string(needed + 1) +
                                    " fields, got " + std::to_string(fields.size()));
    TweetRecord rec;
    rec.id = trim(fields[id_col]);
    rec.text = fields[tweet_col];
    if (trim(rec.text).empty()) throw RowError(row_index, "empty tweet text");
    if (has_labels) {
      const std::string raw = trim(fields[label_col]);
      const auto parsed = parse_label(raw);
      if (!parsed) throw RowError(row_index, "unparseable label value '" + raw + "'");
      rec.label = parsed;
    }
    records.push_back(std::move(rec));
    ++row_index;
  }
  if (records.empty())
    throw EmptyCorpusError("empty corpus: " + path.string() + " has a header but no data rows");
  return records;
}

std::vector<TweetRecord> merge_records(
    const std::vector<std::pair<std::string, std::vector<TweetRecord>>>& tagged_lists) {
  // First pass: find ids appearing in more than one source list.
  std::unordered_map<std::string, int> first_source;
  std::unordered_set<std::string> colliding;
  for (std::size_t s = 0; s < tagged_lists.size(); ++s) {
    for (const auto& rec : tagged_lists[s].second) {
      const auto [it, inserted] = first_source.emplace(rec.id, static_cast<int>(s));
      if (!inserted && it->second != static_cast<int>(s)) colliding.insert(rec.id);
    }
  }

  std::vector<TweetRecord> merged;
  std::unordered_set<std::string> seen;
  for (const auto& [tag, list] : tagged_lists) {
    for (const auto& rec : list) {
      TweetRecord out = rec;
      if (colliding.count(rec.id)) out.id = tag + ":" + rec.id;
      if (!seen.insert(out.id).second)
        throw Error("duplicate record id after merge: '" + out.id + "'");
      merged.push_back(std::move(out));
    }
  }
  return merged;
}

DatasetSplit merge_and_split(std::vector<TweetRecord> records, double ratio,
                             std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("split ratio must be in (0,1), got " + std::to_string(ratio));
  std::vector<std::string> unlabeled;
  for (const auto& r : records)
    if (!r.label) unlabeled.push_back(r.id);
  if (!unlabeled.empty()) {
    std::string ids;
    for (std::size_t i = 0; i < unlabeled.size() && i < 20; ++i)
      ids += (i ? ", " : "") + unlabeled[i];
    if (unlabeled.size() > 20) ids += ", ...";
    throw Error("cannot split: " + std::to_string(unlabeled.size()) +
                " unlabeled record(s): " + ids);
  }

  nn::Rng rng(seed);
  rng.shuffle(records);

  const auto n = static_cast<double>(records.size());
  const auto train_size = static_cast<std::size_t>(std::floor(ratio * n + 0.5));  // round half up

  DatasetSplit split;
  split.seed = seed;
  split.ratio = ratio;
  split.train.assign(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(train_size));
  split.test.assign(records.begin() + static_cast<std::ptrdiff_t>(train_size), records.end());
  return split;
}

std::map<Label, std::size_t> label_counts(const std::vector<TweetRecord>& records) {
  std::map<Label, std::size_t> counts;
  for (const auto& r : records) {
    if (!r.label) throw Error("label_counts: unlabeled record '" + r.id + "'");
    ++counts[*r.label];
  }
  return counts;
}

}  // namespace fndet
