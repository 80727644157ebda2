#pragma once

// Chat-completion transport for constraint elicitation.
//
// A provider turns a PromptBundle into raw model text. Two providers ship:
// an OpenAI-compatible HTTP client and a fixture provider that replays
// recorded responses keyed by prompt hash, used for offline and test runs.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ranbn/constraints.hpp"

namespace ranbn {

struct EndpointConfig {
    std::string base_url;  // e.g. http://localhost:8000; empty = no live endpoint
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string auth_env;  // name of the environment variable holding the bearer token
    double temperature = 0.7;
    std::size_t max_retries = 2;
    std::size_t backoff_ms = 500;
    std::size_t timeout_s = 120;
    std::filesystem::path fixture_dir;  // non-empty = offline fixture mode
};

// FNV-1a over system and user text, as 16 lowercase hex digits.
std::string prompt_hash(const PromptBundle& bundle);

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    // `run_index` distinguishes the independent ensemble runs.
    virtual std::string complete(const PromptBundle& bundle, std::size_t run_index) = 0;
};

// Looks up <dir>/<hash>/response_<i>.txt, then <dir>/response_<i>.txt. With
// fewer recordings than runs, recordings are reused cyclically.
class FixtureProvider : public ChatProvider {
public:
    explicit FixtureProvider(std::filesystem::path dir);
    std::string complete(const PromptBundle& bundle, std::size_t run_index) override;

private:
    std::vector<std::filesystem::path> recordings(const PromptBundle& bundle) const;
    std::filesystem::path dir_;
};

// Transport failures raise Error{Io} after `max_retries` retries; a non-2xx
// status raises Error{Provider} carrying an excerpt of the body.
class HttpChatProvider : public ChatProvider {
public:
    explicit HttpChatProvider(EndpointConfig config);
    std::string complete(const PromptBundle& bundle, std::size_t run_index) override;

private:
    EndpointConfig config_;
};

// Fixture mode when fixture_dir is set, HTTP when base_url is set; otherwise
// Error{Provider}.
std::unique_ptr<ChatProvider> make_provider(const EndpointConfig& config);

// One request; when `archive_dir` is given the raw text is written there as
// response_<run>.txt next to the prompt.
std::string query_llm(const PromptBundle& bundle, ChatProvider& provider, std::size_t run_index,
                      const std::optional<std::filesystem::path>& archive_dir = std::nullopt);

struct ElicitationResult {
    ConstraintSet constraints;
    std::vector<std::string> responses;
    std::vector<std::size_t> malformed_counts;
    std::size_t failed_parses = 0;
};

// build_prompt -> n x query_llm -> parse_constraints -> aggregate_votes ->
// validate_constraints. A response that fails to parse counts as an empty run.
ElicitationResult elicit_constraints(std::span<const VariableSpec> specs, ChatProvider& provider,
                                     const EnsembleParams& params,
                                     const std::optional<std::filesystem::path>& archive_dir = std::nullopt);

}  // namespace ranbn
