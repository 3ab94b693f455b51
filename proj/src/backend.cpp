#include "wmsar/backend.hpp"

#include <algorithm>
#include <cctype>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace wmsar {

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",    "an",   "and",  "are",  "as",    "at",   "be",    "been",
      "but",  "by",   "did",  "do",   "does",  "for",  "from",  "had",
      "has",  "have", "he",   "her",  "him",   "his",  "i",     "if",
      "in",   "is",   "it",   "its",  "me",    "my",   "no",    "not",
      "of",   "on",   "or",   "our",  "she",   "so",   "that",  "the",
      "their", "them", "then", "these", "they", "this", "those", "to",
      "us",   "was",  "we",   "were", "with",  "you",  "your"};
  return words;
}

std::set<std::string> load_lexicon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon " + path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t b = 0, e = line.size();
    while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
    if (e > b) out.insert(line.substr(b, e - b));
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    char lowered = 0;
    if (c >= 'A' && c <= 'Z') lowered = static_cast<char>(c - 'A' + 'a');
    else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'')
      lowered = static_cast<char>(c);
    if (lowered != 0) {
      cur.push_back(lowered);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

bool is_stopword(const std::string& token) {
  return stopwords().count(token) > 0;
}

MockLexicons MockLexicons::load(const std::string& dir) {
  MockLexicons lex;
  lex.positive = load_lexicon_file(dir + "/positive.txt");
  lex.negative = load_lexicon_file(dir + "/negative.txt");
  lex.markers = load_lexicon_file(dir + "/markers.txt");
  return lex;
}

double lexicon_valence(const MockLexicons& lex, const std::string& text) {
  std::set<std::string> seen;
  std::size_t pos_hits = 0, neg_hits = 0;
  for (const auto& tok : tokenize(text)) {
    if (!seen.insert(tok).second) continue;
    if (lex.positive.count(tok)) ++pos_hits;
    if (lex.negative.count(tok)) ++neg_hits;
  }
  const double denom =
      std::max<std::size_t>(1, pos_hits + neg_hits);
  return (static_cast<double>(pos_hits) - static_cast<double>(neg_hits)) /
         denom;
}

std::string mock_infer(const MockLexicons& lex, AgentKind kind,
                       const std::string& utterance_text,
                       const std::optional<ContextHypothesis>& context) {
  nlohmann::json j;
  switch (kind) {
    case AgentKind::Literal: {
      j["m_literal"] = lexicon_valence(lex, utterance_text);
      j["rationale"] = "lexicon valence of the utterance";
      break;
    }
    case AgentKind::Context: {
      // Three most frequent non-stopword tokens, frequency descending,
      // lexicographic on ties.
      std::map<std::string, std::size_t> counts;
      for (const auto& tok : tokenize(utterance_text)) {
        if (!is_stopword(tok)) counts[tok]++;
      }
      std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                              counts.end());
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) {
                         if (a.second != b.second) return a.second > b.second;
                         return a.first < b.first;
                       });
      const std::string t1 = ranked.size() > 0 ? ranked[0].first : "something";
      const std::string t2 = ranked.size() > 1 ? ranked[1].first : t1;
      const std::string t3 = ranked.size() > 2 ? ranked[2].first : t2;
      j["actor_relation"] =
          "speaker and listener are acquaintances discussing " + t1;
      j["scene"] = "an everyday exchange about " + t2;
      j["prior_event"] = "someone mentioned " + t3;
      j["rationale"] = "token-frequency template";
      break;
    }
    case AgentKind::Norm: {
      if (!context)
        throw BackendError("mock norm call without context");
      j["e_norm"] = -lexicon_valence(lex, context->prior_event);
      j["rationale"] = "negated valence of the prior event";
      break;
    }
    case AgentKind::Intent: {
      if (!context)
        throw BackendError("mock intent call without context");
      std::set<std::string> hits;
      for (const auto& tok : tokenize(utterance_text)) {
        if (lex.markers.count(tok)) hits.insert(tok);
      }
      j["t_sar"] = std::min(1.0, static_cast<double>(hits.size()) / 2.0);
      j["intentions"] = std::vector<std::string>(hits.begin(), hits.end());
      j["emotions"] = std::vector<std::string>();
      j["rationale"] = "marker density";
      break;
    }
  }
  return j.dump();
}

MockChatBackend::MockChatBackend(MockLexicons lexicons)
    : lexicons_(std::move(lexicons)) {}

std::string MockChatBackend::complete(const AgentCall& call) {
  calls_.fetch_add(1);
  return mock_infer(lexicons_, call.kind, call.utterance_text, call.context);
}

struct HttpChatBackend::Impl {
  BackendConfig cfg;
  std::string api_key;
  std::string base;
  std::string path;

  std::mutex gate_mutex;
  std::condition_variable gate_cv;
  int in_flight = 0;

  struct Slot {
    Impl& impl;
    explicit Slot(Impl& i) : impl(i) {
      std::unique_lock<std::mutex> lock(impl.gate_mutex);
      impl.gate_cv.wait(lock, [&] {
        return impl.in_flight < impl.cfg.max_concurrent;
      });
      impl.in_flight++;
    }
    ~Slot() {
      {
        std::lock_guard<std::mutex> lock(impl.gate_mutex);
        impl.in_flight--;
      }
      impl.gate_cv.notify_one();
    }
  };
};

HttpChatBackend::HttpChatBackend(BackendConfig cfg)
    : impl_(std::make_unique<Impl>()) {
  validate_backend_config(cfg);
  impl_->cfg = std::move(cfg);

  const char* key = std::getenv(impl_->cfg.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw std::runtime_error("environment variable " + impl_->cfg.api_key_env +
                             " is not set");
  impl_->api_key = key;

  const std::string& ep = impl_->cfg.endpoint;
  std::size_t scheme = ep.find("://");
  if (scheme == std::string::npos)
    throw std::runtime_error("endpoint must include a scheme: " + ep);
  const std::size_t slash = ep.find('/', scheme + 3);
  impl_->base = slash == std::string::npos ? ep : ep.substr(0, slash);
  impl_->path = slash == std::string::npos ? "/" : ep.substr(slash);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (ep.rfind("https://", 0) == 0)
    throw std::runtime_error("built without TLS support; use an http endpoint");
#endif
}

HttpChatBackend::~HttpChatBackend() = default;

std::string HttpChatBackend::tag() const { return impl_->cfg.model; }

std::string HttpChatBackend::complete(const AgentCall& call) {
  Impl::Slot slot(*impl_);

  httplib::Client client(impl_->base);
  client.set_connection_timeout(std::chrono::duration<double>(
      impl_->cfg.timeout_seconds));
  client.set_read_timeout(
      std::chrono::duration<double>(impl_->cfg.timeout_seconds));
  client.set_write_timeout(
      std::chrono::duration<double>(impl_->cfg.timeout_seconds));

  const nlohmann::json body{
      {"model", impl_->cfg.model},
      {"messages",
       nlohmann::json::array(
           {{{"role", "user"}, {"content", call.prompt}}})},
      {"temperature", impl_->cfg.temperature}};

  httplib::Headers headers{{"Authorization", "Bearer " + impl_->api_key}};
  const auto res =
      client.Post(impl_->path, headers, body.dump(), "application/json");
  if (!res)
    throw BackendError("transport failure: " +
                       httplib::to_string(res.error()));
  if (res->status != 200) {
    std::ostringstream msg;
    msg << "http status " << res->status;
    if (!res->body.empty())
      msg << ": " << res->body.substr(0, 200);
    throw BackendError(msg.str());
  }
  try {
    const nlohmann::json j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("unexpected response shape: ") + e.what());
  }
}

}  // namespace wmsar
