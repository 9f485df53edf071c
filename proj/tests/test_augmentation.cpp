#include "support.hpp"

#include "stancekit/augmentation.hpp"
#include "stancekit/error.hpp"
#include "stancekit/http_clients.hpp"
#include "stancekit/parallel.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <thread>

using namespace stancekit;
using stancekit::testing::example;

namespace {

const TaskSpec &task_a() { return TaskSpec::builtin(TaskId::A); }

/// Records every hop and delegates to a tagging translator.
class RecordingTranslator final : public TranslationClient {
public:
    std::string translate(std::string_view text, std::string_view source, std::string_view target) override {
        const std::lock_guard lock(mutex_);
        calls.emplace_back(std::string(source), std::string(target));
        return inner_.translate(text, source, target);
    }
    std::vector<std::pair<std::string, std::string>> calls;

private:
    TaggingTranslator inner_;
    std::mutex mutex_;
};

/// Fails the first `failures` calls, then tags.
class FlakyTranslator final : public TranslationClient {
public:
    FlakyTranslator(int failures, bool transient) : failures_(failures), transient_(transient) {}
    std::string translate(std::string_view text, std::string_view source, std::string_view target) override {
        if (++calls <= failures_) throw TranslationFailure("service unavailable", transient_);
        return TaggingTranslator{}.translate(text, source, target);
    }
    std::atomic<int> calls{0};

private:
    int failures_;
    bool transient_;
};

/// Fails permanently for one source text.
class PoisonTranslator final : public TranslationClient {
public:
    explicit PoisonTranslator(std::string poison) : poison_(std::move(poison)) {}
    std::string translate(std::string_view text, std::string_view source, std::string_view target) override {
        if (text == poison_) throw TranslationFailure("unsupported input", false);
        return TaggingTranslator{}.translate(text, source, target);
    }

private:
    std::string poison_;
};

std::vector<LabeledExample> ten_with_two_minority() {
    std::vector<LabeledExample> xs;
    for (int i = 0; i < 10; ++i) {
        xs.push_back(example("e" + std::to_string(i), "text number " + std::to_string(i), i == 3 || i == 7 ? "HATE" : "NON-HATE"));
    }
    return xs;
}

RetryPolicy fast_retry() {
    RetryPolicy r;
    r.base_delay = std::chrono::milliseconds(0);
    return r;
}

}  // namespace

TEST_CASE("builtin chains start and end in English") {
    const auto &chains = builtin_chains();
    REQUIRE(chains.size() == 4);
    CHECK(chains[0].arrows() == "en>xh>tw>en");
    CHECK(chains[1].arrows() == "en>lo>ps>yo>en");
    CHECK(chains[2].arrows() == "en>yo>so>rw>en");
    CHECK(chains[3].arrows() == "en>zu>om>sn>ts>en");
    for (const auto &c : chains) {
        CHECK(c.hops().front().first == "en");
        CHECK(c.hops().back().second == "en");
        CHECK(c.hops().size() == c.pivots.size() + 1);
    }
}

TEST_CASE("chain parsing and config") {
    const auto c = AugmentationChain::parse("fr-de", "en > fr > DE > en");
    CHECK(c.pivots == std::vector<std::string>{"fr", "de"});
    CHECK_THROWS_AS((void)AugmentationChain::parse("bad", "en>fr>de"), InvalidArgument);
    CHECK_THROWS_AS((void)AugmentationChain::parse("bad", "en>en"), InvalidArgument);
    CHECK_THROWS_AS((void)AugmentationChain::parse("bad", "en>fr>en>de>en"), InvalidArgument);
    CHECK_THROWS_AS((void)AugmentationChain::make("", {"fr"}), InvalidArgument);

    const auto chains = chains_from_config(Config::parse("chain.z = en>zu>en\nchain.a = en>fr>de>en\nother = 1\n"));
    REQUIRE(chains.size() == 2);
    CHECK(chains[0].id == "a");
    CHECK(chains[1].arrows() == "en>zu>en");
    CHECK(chains_from_config(Config{}).empty());
}

TEST_CASE("hops are called in chain order") {
    RecordingTranslator rec;
    const auto out = back_translate(example("1", "hello", "HATE"), builtin_chains()[0], rec);
    using P = std::pair<std::string, std::string>;
    CHECK(rec.calls == std::vector<P>{{"en", "xh"}, {"xh", "tw"}, {"tw", "en"}});
    CHECK(out.text == "hello [xh] [tw] [en]");
    CHECK(out.id == "1~bt:xh-tw");
    CHECK(out.origin == Origin::augmented);
    CHECK(out.chain_id == "xh-tw");
    CHECK(out.label == "HATE");
}

TEST_CASE("reversing translator round-trips on even hop counts") {
    ReversingTranslator rev;
    const auto ex = example("1", "Palindromes are not required!", "HATE");
    const auto one_pivot = AugmentationChain::make("fr", {"fr"});              // 2 hops
    const auto three_pivots = AugmentationChain::make("a-b-c", {"a", "b", "c"});   // 4 hops
    const auto two_pivots = AugmentationChain::make("a-b", {"a", "b"});          // 3 hops
    CHECK(back_translate(ex, one_pivot, rev).text == ex.text);
    CHECK(back_translate(ex, three_pivots, rev).text == ex.text);
    CHECK(back_translate(ex, two_pivots, rev).text == "!deriuqer ton era semordnilaP");
    IdentityTranslator id;
    CHECK(back_translate(ex, builtin_chains()[3], id).text == ex.text);
}

TEST_CASE("four chains on two minority examples give eighteen") {
    TaggingTranslator tag;
    const auto xs = ten_with_two_minority();
    const auto result = augment_training_set(xs, task_a(), builtin_chains(), tag);
    REQUIRE(result.examples.size() == 18);
    CHECK(result.minority_labels == std::vector<std::string>{"HATE"});
    for (std::size_t i = 0; i < 10; ++i) CHECK(result.examples[i] == xs[i]);
    for (std::size_t i = 10; i < 18; ++i) {
        CHECK(result.examples[i].label == "HATE");
        CHECK(result.examples[i].origin == Origin::augmented);
    }
    CHECK(result.examples[10].id == "e3~bt:xh-tw");
    CHECK(result.examples[13].id == "e3~bt:zu-om-sn-ts");
    CHECK(result.examples[14].id == "e7~bt:xh-tw");
    for (const auto &c : result.per_chain) CHECK(c.produced == 2);
    CHECK(result.skipped.empty());
}

TEST_CASE("augmentation invariants hold for random corpora") {
    Rng rng(8);
    TaggingTranslator tag;
    const auto &task = TaskSpec::builtin(TaskId::C);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<LabeledExample> xs;
        const std::size_t n = 1 + rng.below(25);
        std::vector<std::size_t> counts(3, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto l = rng.below(3);
            ++counts[l];
            xs.push_back(example("r" + std::to_string(i), "sample " + std::to_string(i), task.labels()[l]));
        }
        const std::size_t top = *std::max_element(counts.begin(), counts.end());
        std::size_t minority = 0;
        for (const auto c : counts) minority += c == top ? 0 : c;
        AugmentOptions opts;
        opts.max_in_flight = 1 + rng.below(4);
        const auto result = augment_training_set(xs, task, builtin_chains(), tag, opts);
        CHECK(result.examples.size() == n + 4 * minority);
        for (std::size_t i = n; i < result.examples.size(); ++i) {
            const auto &copy = result.examples[i];
            const std::size_t l = *task.index_of(*copy.label);
            CHECK(counts[l] != top);
            const std::string source = copy.id.substr(0, copy.id.find("~bt:"));
            const auto it = std::find_if(xs.begin(), xs.end(), [&](const LabeledExample &e) { return e.id == source; });
            REQUIRE(it != xs.end());
            CHECK(it->label == copy.label);
        }
    }
}

TEST_CASE("max copies applies the first chains only") {
    TaggingTranslator tag;
    AugmentOptions opts;
    opts.max_copies_per_example = 1;
    const auto result = augment_training_set(ten_with_two_minority(), task_a(), builtin_chains(), tag, opts);
    CHECK(result.examples.size() == 12);
    CHECK(result.examples[10].chain_id == "xh-tw");
    CHECK(result.examples[11].chain_id == "xh-tw");
}

TEST_CASE("identical translations are dropped and reported") {
    IdentityTranslator id;
    const auto result = augment_training_set(ten_with_two_minority(), task_a(), builtin_chains(), id);
    CHECK(result.examples.size() == 10);
    REQUIRE(result.skipped.size() == 8);
    CHECK(result.skipped[0].reason == "identical_text");
    CHECK(result.per_chain[0].filtered == 2);
}

TEST_CASE("a failing copy is skipped without aborting the run") {
    PoisonTranslator poison("text number 3");
    AugmentOptions opts;
    opts.retry = fast_retry();
    const auto result = augment_training_set(ten_with_two_minority(), task_a(), builtin_chains(), poison, opts);
    CHECK(result.examples.size() == 14);
    REQUIRE(result.skipped.size() == 4);
    CHECK(result.skipped[0].example_id == "e3");
    CHECK(result.skipped[0].reason == "translation_failure");
    const auto summary = result.summary_json();
    CHECK(summary["total"] == 14);
    CHECK(summary["chains"][0]["failed"] == 1);
}

TEST_CASE("transient failures are retried, permanent ones are not") {
    const auto ex = example("1", "hello", "HATE");
    const auto chain = AugmentationChain::make("fr", {"fr"});
    {
        FlakyTranslator flaky(2, true);
        CHECK(back_translate(ex, chain, flaky, fast_retry()).text == "hello [fr] [en]");
        CHECK(flaky.calls == 4);
    }
    {
        FlakyTranslator flaky(3, true);
        try {
            (void)back_translate(ex, chain, flaky, fast_retry());
            FAIL("expected TranslationFailure");
        } catch (const TranslationFailure &e) {
            CHECK(e.step() == 0);
            CHECK(e.transient());
        }
        CHECK(flaky.calls == 3);
    }
    {
        FlakyTranslator flaky(1, false);
        CHECK_THROWS_AS((void)back_translate(ex, chain, flaky, fast_retry()), TranslationFailure);
        CHECK(flaky.calls == 1);
    }
    {
        RetryPolicy slow;
        slow.base_delay = std::chrono::milliseconds(20);
        FlakyTranslator flaky(2, true);
        const auto start = std::chrono::steady_clock::now();
        (void)back_translate(ex, chain, flaky, slow);
        CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(60));   // 20 + 40
    }
}

TEST_CASE("only original train examples are back-translated") {
    TaggingTranslator tag;
    auto ex = example("1", "hi", "HATE", Split::eval);
    CHECK_THROWS_AS((void)back_translate(ex, builtin_chains()[0], tag), InvalidArgument);
    ex.split = Split::train;
    ex.origin = Origin::augmented;
    ex.chain_id = "xh-tw";
    CHECK_THROWS_AS((void)back_translate(ex, builtin_chains()[0], tag), InvalidArgument);
}

TEST_CASE("parallel_for visits every index and propagates errors") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
    for (const auto &h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 4) throw InvalidArgument("boom"); }), InvalidArgument);
}

TEST_CASE("rate limiter spaces requests") {
    RateLimiter limiter(100.0);
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 6; ++i) limiter.acquire();
    CHECK(std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(45));
}

TEST_CASE("endpoint parsing") {
    const auto ep = parse_endpoint("http://localhost:5000/api/translate");
    CHECK(ep.base == "http://localhost:5000");
    CHECK(ep.path == "/api/translate");
    CHECK(parse_endpoint("https://example.org").path.empty());
    CHECK_THROWS_AS((void)parse_endpoint("localhost:5000"), InvalidArgument);
    CHECK_THROWS_AS((void)parse_endpoint("ftp://x"), InvalidArgument);
}

TEST_CASE("http translator against a local service") {
    httplib::Server server;
    std::atomic<int> unavailable{1};
    server.Post("/translate", [&](const httplib::Request &req, httplib::Response &res) {
        if (unavailable-- > 0) {
            res.status = 503;
            return;
        }
        const auto body = nlohmann::json::parse(req.body);
        if (body.at("q") == "forbidden") {
            res.status = 400;
            return;
        }
        const nlohmann::json reply{{"translatedText", body.at("q").get<std::string>() + "/" + body.at("target").get<std::string>()}};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpTranslator client("http://127.0.0.1:" + std::to_string(port), "", 0.0, 5);
    const auto out = back_translate(example("1", "hi", "HATE"), builtin_chains()[0], client, fast_retry());
    CHECK(out.text == "hi/xh/tw/en");
    try {
        (void)client.translate("forbidden", "en", "xh");
        FAIL("expected TranslationFailure");
    } catch (const TranslationFailure &e) {
        CHECK_FALSE(e.transient());
    }
    server.stop();
    worker.join();

    HttpTranslator offline("http://127.0.0.1:" + std::to_string(port), "", 0.0, 1);
    try {
        (void)offline.translate("x", "en", "xh");
        FAIL("expected TranslationFailure");
    } catch (const TranslationFailure &e) {
        CHECK(e.transient());
    }
}
