#pragma once

#include "qevo/generators.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qevo {

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

/// A chat-completion service. Implementations throw EndpointError.
class ChatEndpoint {
public:
    virtual ~ChatEndpoint() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8000/v1";
    std::string path = "/chat/completions";
    std::string model = "local-model";
    double temperature = 0.7;
    /// Bearer token; the environment variable named by `api_key_env`
    /// overrides it when set.
    std::string api_key;
    std::string api_key_env = "QEVO_API_KEY";
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 2;
    std::chrono::milliseconds backoff{500};  // doubled after each retry
    int max_concurrency = 4;

    bool operator==(const EndpointConfig&) const = default;
};

/// JSON chat-completion client over HTTP(S): messages in, choices out.
class HttpChatEndpoint : public ChatEndpoint {
public:
    explicit HttpChatEndpoint(EndpointConfig config);
    std::string complete(const std::vector<ChatMessage>& messages) override;

    const EndpointConfig& config() const noexcept { return config_; }

private:
    EndpointConfig config_;
    std::string token_;
    std::mutex mutex_;
    std::condition_variable slot_free_;
    int in_flight_ = 0;
};

/// Test double: replays canned replies (or errors) in order and records the
/// conversations it was sent.
class ScriptedEndpoint : public ChatEndpoint {
public:
    struct Failure {
        std::string message;
    };
    using Reply = std::variant<std::string, Failure>;

    explicit ScriptedEndpoint(std::vector<Reply> replies = {});
    void push(Reply reply);
    std::string complete(const std::vector<ChatMessage>& messages) override;

    const std::vector<std::vector<ChatMessage>>& calls() const noexcept { return calls_; }
    std::size_t remaining() const noexcept { return replies_.size(); }

private:
    std::deque<Reply> replies_;
    std::vector<std::vector<ChatMessage>> calls_;
};

/// Prompt templates with named placeholders such as {parent}; see
/// `render_template`.
struct PromptTemplates {
    std::string system;
    std::string research;
    std::string hypothesis_fix;
    std::string coding;
    std::string repair;
    std::string analysis;
    std::string consolidate;

    static PromptTemplates defaults();
    /// Reads <dir>/<name>.txt for each template, keeping the default for
    /// missing files.
    static PromptTemplates load(const std::filesystem::path& dir);

    /// (file stem, text) pairs, in declaration order.
    std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Replaces {name} for every key in `values`; other braces are left alone.
std::string render_template(const std::string& text, const std::map<std::string, std::string>& values);

/// Reads <hypothesis>...</hypothesis> style tags. `experimentation_ideas`
/// comes from the next_step_ideas tag (experimentation_ideas is accepted
/// too). Missing tags leave fields empty.
Hypothesis parse_hypothesis_tags(const std::string& text);

/// Program text from a reply: the first fenced block if any, else the text.
std::string extract_program_text(const std::string& reply);

/// Short description of the program format given to the model.
std::string dsl_reference();

/// Compact text rendering of a record for prompts.
std::string describe_record(const CandidateRecord& record);

struct LlmConfig {
    int repair_budget = 3;
    int hypothesis_repairs = 1;

    bool operator==(const LlmConfig&) const = default;
};

/// Hypothesis -> program -> repair loop against a chat endpoint.
class LlmGenerator : public Generator {
public:
    LlmGenerator(std::shared_ptr<ChatEndpoint> endpoint, PromptTemplates templates = PromptTemplates::defaults(),
                 LlmConfig config = {});

    GeneratorOutcome propose(const GenerationContext& context, Rng& rng, const BacktestCheck& check = {}) override;
    AnalysisResult analyze(const CandidateRecord& candidate, const CandidateRecord* parent) override;
    std::optional<std::string> consolidate(const std::vector<Insight>& insights) override;

private:
    std::string ask(const std::string& prompt, std::vector<std::string>& transcripts);

    std::shared_ptr<ChatEndpoint> endpoint_;
    PromptTemplates templates_;
    LlmConfig config_;
};

}  // namespace qevo
