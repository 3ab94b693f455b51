#include "wmsar/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace wmsar {

namespace {

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RawRow {
  std::size_t line = 0;
  std::string id;
  std::string text;
  std::string label;
};

// RFC-4180-ish reader: quoted fields may contain commas, doubled quotes and
// newlines. Returns one record per physical row.
std::vector<std::pair<std::size_t, std::vector<std::string>>> read_csv(
    std::istream& in) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_field = [&] {
    fields.push_back(field);
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    records.emplace_back(record_line, fields);
    fields.clear();
    any = false;
    record_line = line;
  };

  char ch;
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        end_field();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        if (any || !field.empty() || !fields.empty()) end_record();
        record_line = line;
        break;
      default:
        field.push_back(ch);
        any = true;
        break;
    }
  }
  if (any || !field.empty() || !fields.empty()) end_record();
  return records;
}

bool iequals(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

std::vector<RawRow> parse_delimited(std::istream& in, const CorpusSpec& spec,
                                    std::vector<RejectedRow>& rejects,
                                    std::size_t& data_rows) {
  const auto records = read_csv(in);
  std::vector<RawRow> rows;
  if (records.empty()) return rows;

  std::size_t text_col = 0;
  std::size_t label_col = 1;
  std::size_t start = 0;

  // Header row if it names both configured columns; otherwise the columns
  // are positional (text first, label second) and row one is data.
  const auto& head = records.front().second;
  std::size_t ti = head.size(), li = head.size();
  for (std::size_t i = 0; i < head.size(); ++i) {
    if (iequals(head[i], spec.text_column)) ti = i;
    if (iequals(head[i], spec.label_column)) li = i;
  }
  if (ti < head.size() && li < head.size() && ti != li) {
    text_col = ti;
    label_col = li;
    start = 1;
  }

  for (std::size_t r = start; r < records.size(); ++r) {
    const auto& [line, fields] = records[r];
    ++data_rows;
    if (fields.size() <= std::max(text_col, label_col)) {
      rejects.push_back({line, "too few columns"});
      continue;
    }
    RawRow row;
    row.line = line;
    row.id = "row" + std::to_string(line);
    row.text = fields[text_col];
    row.label = fields[label_col];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RawRow> parse_semeval(std::istream& in,
                                  std::vector<RejectedRow>& rejects,
                                  std::size_t& data_rows) {
  std::vector<RawRow> rows;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos
                               ? std::string::npos
                               : line.find('\t', t1 + 1);
    if (first) {
      first = false;
      // Header row: non-numeric first field.
      if (t1 != std::string::npos) {
        const std::string head = line.substr(0, t1);
        if (!head.empty() &&
            head.find_first_not_of("0123456789") != std::string::npos)
          continue;
      }
    }
    ++data_rows;
    if (t1 == std::string::npos || t2 == std::string::npos) {
      rejects.push_back({lineno, "expected three tab-separated columns"});
      continue;
    }
    RawRow row;
    row.line = lineno;
    row.id = line.substr(0, t1);
    row.label = line.substr(t1 + 1, t2 - t1 - 1);
    row.text = line.substr(t2 + 1);  // remaining tabs belong to the text
    if (row.id.empty() ||
        row.id.find_first_not_of("0123456789") != std::string::npos) {
      rejects.push_back({lineno, "index column must be numeric"});
      continue;
    }
    row.id = "tweet" + row.id;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

CorpusLoad load_corpus(const CorpusSpec& spec) {
  std::ifstream in(spec.path, std::ios::binary);
  if (!in) throw std::runtime_error("load_corpus: cannot open " + spec.path);

  CorpusLoad load;
  std::size_t data_rows = 0;
  std::vector<RawRow> rows;
  switch (spec.format) {
    case CorpusFormat::DelimitedTwoColumn:
      rows = parse_delimited(in, spec, load.rejects, data_rows);
      break;
    case CorpusFormat::SemevalTab:
      rows = parse_semeval(in, load.rejects, data_rows);
      break;
  }

  // The positive literal is configured; the negative literal is whichever
  // other label dominates. Anything else is malformed.
  std::map<std::string, std::size_t> other_counts;
  for (const auto& row : rows) {
    if (row.label != spec.positive_label) ++other_counts[row.label];
  }
  std::string negative;
  std::size_t best = 0;
  for (const auto& [literal, count] : other_counts) {
    if (count > best) {
      best = count;
      negative = literal;
    }
  }

  std::unordered_set<std::string> seen_ids;
  for (auto& row : rows) {
    int label;
    if (row.label == spec.positive_label) {
      label = 1;
    } else if (!negative.empty() && row.label == negative) {
      label = 0;
    } else {
      load.rejects.push_back({row.line, "unmappable label '" + row.label + "'"});
      continue;
    }
    if (row.text.empty()) {
      load.rejects.push_back({row.line, "empty text"});
      continue;
    }
    if (!seen_ids.insert(row.id).second) {
      load.rejects.push_back({row.line, "duplicate id '" + row.id + "'"});
      continue;
    }
    LabeledExample ex;
    ex.utterance.id = std::move(row.id);
    ex.utterance.text = std::move(row.text);
    ex.label = label;
    load.examples.push_back(std::move(ex));
  }

  if (data_rows > 0 &&
      static_cast<double>(load.rejects.size()) >
          0.10 * static_cast<double>(data_rows)) {
    std::ostringstream msg;
    msg << "load_corpus: " << load.rejects.size() << " of " << data_rows
        << " rows malformed (>10%) in " << spec.path;
    throw std::runtime_error(msg.str());
  }
  return load;
}

namespace {

std::array<std::size_t, 3> largest_remainder(std::size_t n,
                                             const std::array<double, 3>& r) {
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = static_cast<double>(n) * r[i];
    sizes[i] = static_cast<std::size_t>(std::floor(quota));
    frac[i] = quota - std::floor(quota);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&frac](std::size_t a, std::size_t b) {
                     return frac[a] > frac[b];
                   });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) sizes[order[i % 3]]++;
  return sizes;
}

void shuffle_indices(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

SplitResult assign_splits(std::vector<LabeledExample> examples,
                          const SplitSpec& spec) {
  for (double r : spec.ratios) {
    if (!(r >= 0.0)) throw std::invalid_argument("assign_splits: bad ratio");
  }
  const double sum = spec.ratios[0] + spec.ratios[1] + spec.ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("assign_splits: ratios must sum to 1");

  std::unordered_set<std::string> ids;
  for (const auto& ex : examples) {
    if (!ids.insert(ex.utterance.id).second)
      throw std::invalid_argument("assign_splits: duplicate id " +
                                  ex.utterance.id);
  }

  SplitResult result;
  const std::size_t n = examples.size();
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < n; ++i)
    by_class[examples[i].label == 1 ? 1 : 0].push_back(i);

  bool stratified = spec.stratified;
  if (stratified) {
    if (n < 10) {
      stratified = false;
      result.warnings.push_back(
          "fewer than 10 examples; falling back to unstratified split");
    } else {
      for (const auto& cls : by_class) {
        if (!cls.empty() && cls.size() < 3) {
          stratified = false;
          result.warnings.push_back(
              "a class has fewer than 3 examples; falling back to "
              "unstratified split");
          break;
        }
      }
    }
  }

  std::mt19937_64 rng(spec.seed);
  auto assign = [&](std::vector<std::size_t>& idx) {
    shuffle_indices(idx, rng);
    const auto sizes = largest_remainder(idx.size(), spec.ratios);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      const Split split =
          s == 0 ? Split::Train : (s == 1 ? Split::Val : Split::Test);
      for (std::size_t k = 0; k < sizes[s]; ++k, ++pos)
        examples[idx[pos]].split = split;
    }
  };

  if (stratified) {
    for (auto& cls : by_class) assign(cls);
  } else {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    assign(all);
  }

  for (const auto& ex : examples) {
    if (ex.split == Split::Train) result.sizes[0]++;
    if (ex.split == Split::Val) result.sizes[1]++;
    if (ex.split == Split::Test) result.sizes[2]++;
  }
  result.examples = std::move(examples);
  return result;
}

void save_split_manifest(const std::vector<LabeledExample>& examples,
                         const std::string& path) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& ex : examples) j[ex.utterance.id] = split_name(ex.split);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_split_manifest: cannot open " + path);
  out << j.dump(2) << "\n";
}

std::unordered_map<std::string, Split> load_split_manifest(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_split_manifest: cannot open " + path);
  nlohmann::json j;
  in >> j;
  std::unordered_map<std::string, Split> manifest;
  for (const auto& [id, split] : j.items())
    manifest.emplace(id, split_from_name(split.get<std::string>()));
  return manifest;
}

void apply_split_manifest(
    std::vector<LabeledExample>& examples,
    const std::unordered_map<std::string, Split>& manifest) {
  std::vector<std::string> missing;
  for (auto& ex : examples) {
    const auto it = manifest.find(ex.utterance.id);
    if (it == manifest.end()) {
      missing.push_back(ex.utterance.id);
      continue;
    }
    ex.split = it->second;
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "apply_split_manifest: " << missing.size()
        << " id(s) missing from manifest:";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i)
      msg << " " << missing[i];
    throw std::runtime_error(msg.str());
  }
}

std::string normalize_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = false;
  for (char c : text) {
    const bool ws = c == ' ' || c == '\t' || c == '\r' || c == '\n' ||
                    c == '\f' || c == '\v';
    if (ws) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string cache_key(const std::string& text, const std::string& backend_tag) {
  const std::string material =
      normalize_text(text) + '\x1f' + backend_tag;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(material)));
  return buf;
}

SignalCache::SignalCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;  // first run: nothing cached yet
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      const std::string key = j.at("key").get<std::string>();
      SignalRecord record = j.at("record").get<SignalRecord>();
      entries_[key] = std::move(record);  // later lines win
    } catch (const std::exception& e) {
      warnings_.push_back("cache line " + std::to_string(lineno) +
                          " skipped: " + e.what());
    }
  }
}

std::optional<SignalRecord> SignalCache::get(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void SignalCache::put(const std::string& key, const SignalRecord& record) {
  std::lock_guard<std::mutex> lock(mutex_);
  nlohmann::json line{{"key", key},
                      {"backend_tag", record.backend_tag},
                      {"record", record},
                      {"timestamp", now_iso8601()}};
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cache: cannot append to " + path_);
  out << line.dump() << "\n";
  out.flush();
  entries_[key] = record;
}

std::size_t SignalCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

std::vector<std::string> SignalCache::warnings() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return warnings_;
}

nlohmann::json rejects_to_json(const std::vector<RejectedRow>& rejects) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rejects)
    arr.push_back({{"line", r.line}, {"reason", r.reason}});
  return arr;
}

}  // namespace wmsar
