#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "wmsar/signal_model.hpp"

namespace wmsar {

enum class CorpusFormat { DelimitedTwoColumn, SemevalTab };

struct CorpusSpec {
  std::string path;
  CorpusFormat format = CorpusFormat::DelimitedTwoColumn;
  std::string text_column = "text";
  std::string label_column = "label";
  std::string positive_label = "1";
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based line number in the source file
  std::string reason;
};

struct CorpusLoad {
  std::vector<LabeledExample> examples;
  std::vector<RejectedRow> rejects;
};

// Parse a corpus file. Malformed rows are collected, not fatal, unless they
// exceed 10% of data rows, which raises std::runtime_error.
CorpusLoad load_corpus(const CorpusSpec& spec);

struct SplitSpec {
  std::array<double, 3> ratios = {0.8, 0.1, 0.1};  // train/val/test
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitResult {
  std::vector<LabeledExample> examples;  // with split assigned
  std::array<std::size_t, 3> sizes = {0, 0, 0};
  std::vector<std::string> warnings;
};

// Deterministic seeded split with largest-remainder apportionment.
// Stratified by label unless a class is too small, in which case it falls
// back to unstratified and records a warning.
SplitResult assign_splits(std::vector<LabeledExample> examples,
                          const SplitSpec& spec);

void save_split_manifest(const std::vector<LabeledExample>& examples,
                         const std::string& path);
std::unordered_map<std::string, Split> load_split_manifest(
    const std::string& path);
// Overwrite each example's split from the manifest; ids absent from the
// manifest raise std::runtime_error.
void apply_split_manifest(
    std::vector<LabeledExample>& examples,
    const std::unordered_map<std::string, Split>& manifest);

// Normalization used for cache keys: trim outer whitespace, collapse inner
// runs to single spaces, preserve case.
std::string normalize_text(const std::string& text);

std::uint64_t fnv1a64(const std::string& data);

// key = hex(fnv1a64(normalized_text + US + backend_tag))
std::string cache_key(const std::string& text, const std::string& backend_tag);

// Append-only JSONL store of extracted signal records. The file is replayed
// on open; the last line for a key wins. Corrupt lines are skipped and
// reported through warnings(). Thread-safe.
class SignalCache {
 public:
  explicit SignalCache(std::string path);

  std::optional<SignalRecord> get(const std::string& key) const;
  void put(const std::string& key, const SignalRecord& record);

  std::size_t size() const;
  std::vector<std::string> warnings() const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::unordered_map<std::string, SignalRecord> entries_;
  std::vector<std::string> warnings_;
  mutable std::mutex mutex_;
};

nlohmann::json rejects_to_json(const std::vector<RejectedRow>& rejects);

}  // namespace wmsar
