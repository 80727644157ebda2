#include "ranbn/llm_client.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ranbn/errors.hpp"

namespace ranbn {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << text;
}

}  // namespace

std::string prompt_hash(const PromptBundle& bundle) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    mix(bundle.system_text);
    mix(std::string(1, '\0'));
    mix(bundle.user_text);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

FixtureProvider::FixtureProvider(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::vector<std::filesystem::path> FixtureProvider::recordings(const PromptBundle& bundle) const {
    for (const auto& base : {dir_ / prompt_hash(bundle), dir_}) {
        std::vector<std::filesystem::path> found;
        for (std::size_t i = 0;; ++i) {
            auto p = base / ("response_" + std::to_string(i) + ".txt");
            if (!std::filesystem::exists(p)) break;
            found.push_back(p);
        }
        if (!found.empty()) return found;
    }
    return {};
}

std::string FixtureProvider::complete(const PromptBundle& bundle, std::size_t run_index) {
    auto files = recordings(bundle);
    if (files.empty())
        fail(ErrorKind::Provider, "no recorded response for prompt " + prompt_hash(bundle) + " in " + dir_.string());
    return read_file(files[run_index % files.size()]);
}

HttpChatProvider::HttpChatProvider(EndpointConfig config) : config_(std::move(config)) {}

std::string HttpChatProvider::complete(const PromptBundle& bundle, std::size_t /*run_index*/) {
    nlohmann::json body{{"model", config_.model},
                        {"temperature", config_.temperature},
                        {"messages",
                         {{{"role", "system"}, {"content", bundle.system_text}},
                          {{"role", "user"}, {"content", bundle.user_text}}}}};
    httplib::Headers headers;
    if (!config_.auth_env.empty()) {
        if (const char* token = std::getenv(config_.auth_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    std::string last_error;
    for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0 && config_.backoff_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms * attempt));
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(static_cast<time_t>(std::min<std::size_t>(config_.timeout_s, 10)), 0);
        client.set_read_timeout(static_cast<time_t>(config_.timeout_s), 0);
        auto res = client.Post(config_.path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            fail(ErrorKind::Provider,
                 "endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
        }
        try {
            auto j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::Provider, std::string("unexpected response body: ") + e.what());
        }
    }
    fail(ErrorKind::Io, "endpoint " + config_.base_url + " unreachable after " +
                            std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

std::unique_ptr<ChatProvider> make_provider(const EndpointConfig& config) {
    if (!config.fixture_dir.empty()) return std::make_unique<FixtureProvider>(config.fixture_dir);
    if (!config.base_url.empty()) return std::make_unique<HttpChatProvider>(config);
    fail(ErrorKind::Provider, "no LLM endpoint or fixture directory configured");
}

std::string query_llm(const PromptBundle& bundle, ChatProvider& provider, std::size_t run_index,
                      const std::optional<std::filesystem::path>& archive_dir) {
    auto text = provider.complete(bundle, run_index);
    if (archive_dir) {
        std::filesystem::create_directories(*archive_dir);
        const auto prompt_path = *archive_dir / "prompt.txt";
        if (!std::filesystem::exists(prompt_path))
            write_file(prompt_path, "### system\n" + bundle.system_text + "\n### user\n" + bundle.user_text);
        write_file(*archive_dir / ("response_" + std::to_string(run_index) + ".txt"), text);
    }
    return text;
}

ElicitationResult elicit_constraints(std::span<const VariableSpec> specs, ChatProvider& provider,
                                     const EnsembleParams& params,
                                     const std::optional<std::filesystem::path>& archive_dir) {
    if (params.n_runs == 0) fail(ErrorKind::Parameter, "ensemble size must be at least 1");
    const auto bundle = build_prompt(specs);
    ElicitationResult result;
    std::vector<std::vector<EdgeConstraint>> runs;
    std::vector<VariableRange> ranges;
    for (std::size_t i = 0; i < params.n_runs; ++i) {
        auto text = query_llm(bundle, provider, i, archive_dir);
        try {
            auto parsed = parse_constraints(text);
            result.malformed_counts.push_back(parsed.malformed_count);
            runs.push_back(std::move(parsed.records));
            if (ranges.empty()) ranges = std::move(parsed.ranges);
        } catch (const ParseError&) {
            ++result.failed_parses;
            result.malformed_counts.push_back(0);
            runs.emplace_back();
        }
        result.responses.push_back(std::move(text));
    }
    auto set = aggregate_votes(runs, params);
    set.ranges = std::move(ranges);
    result.constraints = validate_constraints(std::move(set), specs);
    return result;
}

}  // namespace ranbn
