#include "stancekit/http_clients.hpp"

#include "stancekit/error.hpp"

#include <httplib.h>
#include <json.hpp>

namespace stancekit {

HttpEndpoint parse_endpoint(std::string_view url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw InvalidArgument("endpoint '" + std::string(url) + "' must start with http:// or https://");
    }
    const std::string_view scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw InvalidArgument("unsupported endpoint scheme '" + std::string(scheme) + "'");
    }
    const std::size_t path_start = url.find('/', scheme_end + 3);
    HttpEndpoint ep;
    ep.base = std::string(url.substr(0, path_start));
    if (path_start != std::string_view::npos) {
        ep.path = std::string(url.substr(path_start));
    }
    if (ep.base.size() <= scheme_end + 3) {
        throw InvalidArgument("endpoint '" + std::string(url) + "' has no host");
    }
    return ep;
}

namespace {

httplib::Client make_client(const HttpEndpoint &ep, int timeout) {
    httplib::Client cli(ep.base);
    cli.set_connection_timeout(timeout, 0);
    cli.set_read_timeout(timeout, 0);
    cli.set_write_timeout(timeout, 0);
    return cli;
}

}  // namespace

HttpTranslator::HttpTranslator(std::string endpoint_url, std::string api_key, double requests_per_second, int timeout_seconds)
    : endpoint_(parse_endpoint(endpoint_url)), key_(std::move(api_key)), rps_(requests_per_second), timeout_(timeout_seconds) {
    if (endpoint_.path.empty() || endpoint_.path == "/") {
        endpoint_.path = "/translate";
    }
}

std::string HttpTranslator::translate(std::string_view text, std::string_view source, std::string_view target) {
    nlohmann::json body{{"q", text}, {"source", source}, {"target", target}, {"format", "text"}};
    if (!key_.empty()) {
        body["api_key"] = key_;
    }
    auto cli = make_client(endpoint_, timeout_);
    const auto res = cli.Post(endpoint_.path, body.dump(), "application/json");
    if (!res) {
        throw TranslationFailure("translation request failed: " + httplib::to_string(res.error()), true);
    }
    if (res->status != 200) {
        const bool transient = res->status == 429 || res->status >= 500;
        throw TranslationFailure("translation service returned HTTP " + std::to_string(res->status), transient);
    }
    try {
        return nlohmann::json::parse(res->body).at("translatedText").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
        throw TranslationFailure(std::string("unexpected translation response: ") + e.what(), false);
    }
}

ChatCompletionClient::ChatCompletionClient(std::string endpoint_url, std::string api_key, std::string model, double temperature,
                                           int timeout_seconds)
    : endpoint_(parse_endpoint(endpoint_url)), key_(std::move(api_key)), model_(std::move(model)), temperature_(temperature),
      timeout_(timeout_seconds) {
    if (endpoint_.path.empty() || endpoint_.path == "/") {
        endpoint_.path = "/v1/chat/completions";
    }
}

std::string ChatCompletionClient::complete(std::string_view prompt) {
    const nlohmann::json body{{"model", model_},
                              {"temperature", temperature_},
                              {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    auto cli = make_client(endpoint_, timeout_);
    httplib::Headers headers;
    if (!key_.empty()) {
        headers.emplace("Authorization", "Bearer " + key_);
    }
    const auto res = cli.Post(endpoint_.path, headers, body.dump(), "application/json");
    if (!res) {
        throw ClientFailure("LLM request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ClientFailure("LLM endpoint returned HTTP " + std::to_string(res->status));
    }
    try {
        return nlohmann::json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception &e) {
        throw ClientFailure(std::string("unexpected LLM response: ") + e.what());
    }
}

}  // namespace stancekit
