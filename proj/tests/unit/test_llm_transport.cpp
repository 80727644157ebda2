#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "ranbn/errors.hpp"
#include "ranbn/llm_client.hpp"
#include "test_support.hpp"

using namespace ranbn;

namespace {

PromptBundle small_bundle() {
    std::vector<VariableSpec> specs{ranbn::testing::discrete_spec("p0_nominal", 2, Role::Config),
                                    ranbn::testing::discrete_spec("RSRP", 3), ranbn::testing::discrete_spec("UL_Mbps", 3, Role::Kpi)};
    return build_prompt(specs);
}

// Chat-completion stub on an ephemeral port; runs until destroyed.
class StubServer {
public:
    explicit StubServer(int status, std::string content) {
        server_.Post("/v1/chat/completions", [this, status, content](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            last_body_ = req.body;
            last_auth_ = req.get_header_value("Authorization");
            if (status != 200) {
                res.status = status;
                res.set_content("{\"error\": \"overloaded\"}", "application/json");
                return;
            }
            nlohmann::json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int hits() const { return hits_; }
    const std::string& last_body() const { return last_body_; }
    const std::string& last_auth() const { return last_auth_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    std::string last_body_;
    std::string last_auth_;
};

}  // namespace

TEST(FixtureProvider, ReturnsRecordedTextVerbatim) {
    const auto dir = ranbn::testing::scratch_dir("fixture_passthrough");
    const std::string recorded = "Let me reason step by step.\n```json\n[]\n```\n";
    std::ofstream(dir / "response_0.txt") << recorded;
    FixtureProvider p(dir);
    EXPECT_EQ(p.complete(small_bundle(), 0), recorded);
}

TEST(FixtureProvider, RepeatedCallsAreIdentical) {
    FixtureProvider p(ranbn::testing::fixture_path("llm_table1"));
    const auto b = small_bundle();
    EXPECT_EQ(p.complete(b, 2), p.complete(b, 2));
    EXPECT_NE(p.complete(b, 0), p.complete(b, 3));
}

TEST(FixtureProvider, HashDirectoryTakesPrecedence) {
    const auto dir = ranbn::testing::scratch_dir("fixture_hash");
    const auto b = small_bundle();
    std::filesystem::create_directories(dir / prompt_hash(b));
    std::ofstream(dir / "response_0.txt") << "generic";
    std::ofstream(dir / prompt_hash(b) / "response_0.txt") << "specific";
    FixtureProvider p(dir);
    EXPECT_EQ(p.complete(b, 0), "specific");
}

TEST(FixtureProvider, EmptyDirectoryIsProviderError) {
    FixtureProvider p(ranbn::testing::scratch_dir("fixture_empty"));
    try {
        p.complete(small_bundle(), 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Provider);
    }
}

TEST(MakeProvider, NothingConfiguredIsProviderError) {
    try {
        make_provider(EndpointConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Provider);
    }
}

TEST(PromptHash, SixteenHexDigitsAndSensitiveToText) {
    auto b = small_bundle();
    const auto h = prompt_hash(b);
    EXPECT_EQ(h.size(), 16u);
    EXPECT_EQ(h.find_first_not_of("0123456789abcdef"), std::string::npos);
    b.user_text += " ";
    EXPECT_NE(prompt_hash(b), h);
}

TEST(HttpProvider, PostsChatCompletionAndReadsContent) {
    StubServer server(200, "```json\n[]\n```");
    ::setenv("RANBN_TEST_TOKEN", "secret", 1);
    EndpointConfig cfg;
    cfg.base_url = server.url();
    cfg.model = "stub-model";
    cfg.auth_env = "RANBN_TEST_TOKEN";
    cfg.timeout_s = 5;
    HttpChatProvider p(cfg);
    EXPECT_EQ(p.complete(small_bundle(), 0), "```json\n[]\n```");
    const auto body = nlohmann::json::parse(server.last_body());
    EXPECT_EQ(body.at("model"), "stub-model");
    EXPECT_EQ(body.at("messages").size(), 2u);
    EXPECT_EQ(body.at("messages").at(0).at("role"), "system");
    EXPECT_EQ(server.last_auth(), "Bearer secret");
}

TEST(HttpProvider, ErrorStatusIsProviderErrorWithoutRetry) {
    StubServer server(503, "");
    EndpointConfig cfg;
    cfg.base_url = server.url();
    cfg.max_retries = 3;
    cfg.backoff_ms = 0;
    cfg.timeout_s = 5;
    HttpChatProvider p(cfg);
    try {
        p.complete(small_bundle(), 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Provider);
        EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
    }
    EXPECT_EQ(server.hits(), 1);
}

TEST(HttpProvider, UnreachableEndpointIsIoErrorAfterRetries) {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }  // closed again: nothing listens on `port`
    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.max_retries = 2;
    cfg.backoff_ms = 1;
    cfg.timeout_s = 2;
    HttpChatProvider p(cfg);
    try {
        p.complete(small_bundle(), 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
        EXPECT_NE(std::string(e.what()).find("3 attempts"), std::string::npos);
    }
}

TEST(QueryLlm, ArchivesPromptAndResponse) {
    const auto dir = ranbn::testing::scratch_dir("archive");
    FixtureProvider p(ranbn::testing::fixture_path("llm_table1"));
    const auto text = query_llm(small_bundle(), p, 1, dir);
    ASSERT_TRUE(std::filesystem::exists(dir / "response_1.txt"));
    std::ifstream in(dir / "response_1.txt");
    std::string archived((std::istreambuf_iterator<char>(in)), {});
    EXPECT_EQ(archived, text);
    EXPECT_TRUE(std::filesystem::exists(dir / "prompt.txt"));
}
