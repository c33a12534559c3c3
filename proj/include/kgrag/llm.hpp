#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgrag/classifier.hpp"
#include "kgrag/http.hpp"
#include "kgrag/path_ranking.hpp"

namespace kgrag {

// ---------------------------------------------------------------------------
// Prompts

enum class PromptKind { Answer, Feedback };

std::string_view to_string(PromptKind kind) noexcept;

/// Zero-shot template with one {paths} and one {question} slot.
struct PromptTemplate {
    PromptKind kind = PromptKind::Answer;
    std::string body;

    static const PromptTemplate& answer();
    static const PromptTemplate& feedback();
    static const PromptTemplate& of(PromptKind kind);

    /// Throws InvalidArgument unless each slot occurs exactly once.
    void validate() const;
};

inline constexpr std::string_view kNoPaths = "None";

/// Paths go one per line in rank order; an empty list renders "None".
std::string render_prompt(std::string_view question, std::span<const std::string> path_texts, PromptKind kind);
std::string render_prompt(std::string_view question, const RankedPaths& ranked, PromptKind kind);

struct ParsedPrompt {
    PromptKind kind = PromptKind::Answer;
    std::vector<std::string> paths;
    std::string question;
};

/// Inverse of render_prompt; nullopt if the text matches neither template.
std::optional<ParsedPrompt> parse_prompt(std::string_view prompt);

// ---------------------------------------------------------------------------
// Clients

struct ChatMessage {
    std::string role;
    std::string content;
};

struct GenerationParams {
    std::string model = "gpt-4o-mini";
    double temperature = 0.01;
    int max_tokens = 256;
};

struct LlmResponse {
    std::string raw_text;
    std::vector<std::string> extracted_answers;
    std::optional<std::string> feedback_path; ///< echoed path line, or "NO"
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    /// Reply text. Throws Error{Generation} when the endpoint cannot be
    /// reached and Error{Protocol} for a reply it cannot read.
    virtual std::string complete(const std::vector<ChatMessage>& messages, const GenerationParams& params) = 0;
};

struct ChatClientConfig {
    std::string url = "http://127.0.0.1:8000/v1/chat/completions";
    std::string api_key_env = "KGRAG_LLM_API_KEY";
    std::chrono::milliseconds timeout{60000};
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff{500};
    std::size_t max_in_flight = 4;
};

/// Chat-completions over HTTP. Transport failures, 429 and 5xx are retried
/// with linear backoff; at most `max_in_flight` requests run at once.
class ChatClient final : public LlmClient {
public:
    explicit ChatClient(ChatClientConfig config, std::shared_ptr<http::Transport> transport = nullptr);
    std::string complete(const std::vector<ChatMessage>& messages, const GenerationParams& params) override;

    std::size_t attempts() const noexcept { return attempts_.load(); }

    static std::string request_body(const std::vector<ChatMessage>& messages, const GenerationParams& params);
    /// choices[0].message.content, or Error{Protocol}.
    static std::string reply_content(const std::string& body);

private:
    ChatClientConfig config_;
    std::shared_ptr<http::Transport> transport_;
    std::counting_semaphore<> slots_;
    std::atomic<std::size_t> attempts_{0};
};

/// Offline stand-in. Knows the gold answers per question and answers
/// correctly exactly when a ranked path in the prompt ends at a gold entity:
/// the answer prompt gets that path's terminal entity and the feedback
/// prompt gets the path itself. Otherwise "unknown" / "NO".
class MockLlmClient final : public LlmClient {
public:
    MockLlmClient() = default;
    void add_gold(std::string_view question, std::span<const std::string> answers);

    std::string complete(const std::vector<ChatMessage>& messages, const GenerationParams& params) override;
    std::size_t calls() const noexcept { return calls_.load(); }

    static constexpr std::string_view kUnknown = "unknown";
    static constexpr std::string_view kNo = "NO";

private:
    std::unordered_map<std::string, std::vector<std::string>> gold_; // normalised question -> normalised answers
    std::atomic<std::size_t> calls_{0};
};

/// Counts calls made through it; lets a single query prove which stages
/// talked to the model.
class CountingClient final : public LlmClient {
public:
    explicit CountingClient(LlmClient& inner) : inner_(inner) {}
    std::string complete(const std::vector<ChatMessage>& messages, const GenerationParams& params) override {
        ++calls_;
        return inner_.complete(messages, params);
    }
    std::size_t calls() const noexcept { return calls_; }

private:
    LlmClient& inner_;
    std::size_t calls_ = 0;
};

/// Send one user message and split the reply.
LlmResponse generate(LlmClient& client, std::string_view prompt, const GenerationParams& params = {});

/// Refined label from a feedback reply: the first line that parses as a
/// " → "-separated path gives the hop count. "NO" or junk yields nullopt.
std::optional<ComplexityLabel> parse_feedback(const LlmResponse& response, int delta = kDefaultDelta);

/// Terminal entity of a rendered path line.
std::string path_terminal(std::string_view path_text);

/// 1 iff some gold answer, normalised, appears as a token run inside the
/// first non-blank line of the reply. Throws InvalidArgument on empty gold.
int hits_at_1(const LlmResponse& response, std::span<const std::string> gold);

} // namespace kgrag
