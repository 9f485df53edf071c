#pragma once

#include "stancekit/augmentation.hpp"
#include "stancekit/prompt.hpp"

#include <string>
#include <string_view>

namespace stancekit {

struct HttpEndpoint {
    std::string base;   ///< scheme://host[:port]
    std::string path;   ///< empty when the URL has none
};

/// Splits `http(s)://host[:port][/path]`; throws InvalidArgument otherwise.
[[nodiscard]] HttpEndpoint parse_endpoint(std::string_view url);

/// LibreTranslate-style service: POST {"q","source","target","format","api_key"}
/// to the endpoint (path defaults to /translate) and read "translatedText".
/// Connection errors, 429 and 5xx are transient failures; other non-200
/// statuses are permanent.
class HttpTranslator final : public TranslationClient {
public:
    HttpTranslator(std::string endpoint_url, std::string api_key, double requests_per_second = 0.0, int timeout_seconds = 30);

    std::string translate(std::string_view text, std::string_view source, std::string_view target) override;
    [[nodiscard]] double requests_per_second() const override { return rps_; }

private:
    HttpEndpoint endpoint_;
    std::string key_;
    double rps_;
    int timeout_;
};

/// OpenAI-compatible chat completions endpoint (path defaults to
/// /v1/chat/completions). Sends the prompt as a single user message.
class ChatCompletionClient final : public LLMClient {
public:
    ChatCompletionClient(std::string endpoint_url, std::string api_key, std::string model, double temperature = 0.0, int timeout_seconds = 60);

    std::string complete(std::string_view prompt) override;

private:
    HttpEndpoint endpoint_;
    std::string key_;
    std::string model_;
    double temperature_;
    int timeout_;
};

}  // namespace stancekit
