#pragma once

#include <atomic>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "wmsar/agents.hpp"

namespace wmsar {

// Lowercased alphanumeric tokens (apostrophes kept); everything else
// separates.
std::vector<std::string> tokenize(const std::string& text);

bool is_stopword(const std::string& token);

struct MockLexicons {
  std::set<std::string> positive;
  std::set<std::string> negative;
  std::set<std::string> markers;

  // Reads positive.txt / negative.txt / markers.txt (one token per line).
  static MockLexicons load(const std::string& dir);
};

// Valence of a text under the lexicons: (|P hits| - |N hits|) /
// max(1, |P hits| + |N hits|) over the distinct-token set.
double lexicon_valence(const MockLexicons& lex, const std::string& text);

// Deterministic offline stand-in for the model backend. Pure function of
// its inputs; responses use the same JSON shapes the parsers expect.
std::string mock_infer(const MockLexicons& lex, AgentKind kind,
                       const std::string& utterance_text,
                       const std::optional<ContextHypothesis>& context);

class MockChatBackend : public ChatBackend {
 public:
  explicit MockChatBackend(MockLexicons lexicons);

  std::string complete(const AgentCall& call) override;
  std::string tag() const override { return "mock"; }

  std::size_t calls() const { return calls_; }

 private:
  MockLexicons lexicons_;
  std::atomic<std::size_t> calls_{0};
};

// OpenAI-style chat-completions client. The API key is read from the
// environment variable named in the config; in-flight requests are capped
// at cfg.max_concurrent.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendConfig cfg);
  ~HttpChatBackend() override;

  std::string complete(const AgentCall& call) override;
  std::string tag() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wmsar
