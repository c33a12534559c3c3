#include "kgrag/llm.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

namespace {

constexpr std::string_view kPathsSlot = "{paths}";
constexpr std::string_view kQuestionSlot = "{question}";

const std::string kFeedbackBody =
    "You are an expert reasoner with a deep understanding of logical connections and relationships. "
    "Your task is to analyze the given reasoning paths and provide accurate reasoning path to the questions "
    "based on these paths. Based on the reasoning paths, please extract the correct reasoning path. "
    "If NO correct reasoning path, please just reply NO.\n\n"
    "Reasoning Paths: {paths}\n\n"
    "Question: {question}\n\n"
    "Correct reasoning path:";

const std::string kAnswerBody =
    "You are an expert reasoner with a deep understanding of logical connections and relationships. "
    "Your task is to analyze the given reasoning paths and provide clear and accurate answers to the questions "
    "based on these paths. Based on the reasoning paths, please answer the given question.\n\n"
    "Reasoning Paths: {paths}\n\n"
    "Question: {question}";

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) ++n;
    return n;
}

struct TemplateParts {
    std::string_view prefix;
    std::string_view middle;
    std::string_view suffix;
};

TemplateParts split_template(const PromptTemplate& t) {
    std::string_view body = t.body;
    const auto p = body.find(kPathsSlot);
    const auto q = body.find(kQuestionSlot);
    return TemplateParts{body.substr(0, p), body.substr(p + kPathsSlot.size(), q - p - kPathsSlot.size()),
                         body.substr(q + kQuestionSlot.size())};
}

std::vector<std::string> nonblank_lines(std::string_view s) {
    std::vector<std::string> out;
    for (auto& line : text::split(s, "\n")) {
        auto t = text::trim(line);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

} // namespace

std::string_view to_string(PromptKind kind) noexcept {
    return kind == PromptKind::Answer ? "answer" : "feedback";
}

const PromptTemplate& PromptTemplate::answer() {
    static const PromptTemplate t{PromptKind::Answer, kAnswerBody};
    return t;
}

const PromptTemplate& PromptTemplate::feedback() {
    static const PromptTemplate t{PromptKind::Feedback, kFeedbackBody};
    return t;
}

const PromptTemplate& PromptTemplate::of(PromptKind kind) {
    return kind == PromptKind::Answer ? answer() : feedback();
}

void PromptTemplate::validate() const {
    if (count_occurrences(body, kPathsSlot) != 1 || count_occurrences(body, kQuestionSlot) != 1)
        throw Error(ErrorKind::InvalidArgument, "prompt template needs exactly one {paths} and one {question} slot");
    if (body.find(kPathsSlot) > body.find(kQuestionSlot))
        throw Error(ErrorKind::InvalidArgument, "prompt template must list paths before the question");
}

std::string render_prompt(std::string_view question, std::span<const std::string> path_texts, PromptKind kind) {
    const auto& tmpl = PromptTemplate::of(kind);
    const auto parts = split_template(tmpl);
    std::string paths;
    if (path_texts.empty()) {
        paths = kNoPaths;
    } else {
        for (const auto& p : path_texts) {
            paths += '\n';
            paths += p;
        }
    }
    std::string out;
    out.reserve(tmpl.body.size() + paths.size() + question.size());
    out += parts.prefix;
    out += paths;
    out += parts.middle;
    out += question;
    out += parts.suffix;
    return out;
}

std::string render_prompt(std::string_view question, const RankedPaths& ranked, PromptKind kind) {
    return render_prompt(question, ranked.texts(), kind);
}

std::optional<ParsedPrompt> parse_prompt(std::string_view prompt) {
    for (auto kind : {PromptKind::Feedback, PromptKind::Answer}) {
        const auto parts = split_template(PromptTemplate::of(kind));
        if (!prompt.starts_with(parts.prefix) || !prompt.ends_with(parts.suffix)) continue;
        auto rest = prompt.substr(parts.prefix.size(), prompt.size() - parts.prefix.size() - parts.suffix.size());
        const auto mid = rest.find(parts.middle);
        if (mid == std::string_view::npos) continue;
        ParsedPrompt parsed;
        parsed.kind = kind;
        parsed.question = std::string(rest.substr(mid + parts.middle.size()));
        const auto paths = rest.substr(0, mid);
        if (paths == kNoPaths) return parsed;
        if (!paths.starts_with('\n')) continue;
        parsed.paths = text::split(paths.substr(1), "\n");
        return parsed;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

ChatClient::ChatClient(ChatClientConfig config, std::shared_ptr<http::Transport> transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_in_flight))) {
    if (!transport_) transport_ = std::make_shared<http::HttplibTransport>();
    if (config_.max_retries < 0) throw Error(ErrorKind::Config, "max_retries must be nonnegative");
    http::parse_endpoint(config_.url);
}

std::string ChatClient::request_body(const std::vector<ChatMessage>& messages, const GenerationParams& params) {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    nlohmann::json body = {{"model", params.model},
                           {"messages", msgs},
                           {"temperature", params.temperature},
                           {"max_tokens", params.max_tokens}};
    return body.dump();
}

std::string ChatClient::reply_content(const std::string& body) {
    auto reply = nlohmann::json::parse(body, nullptr, false);
    if (reply.is_discarded()) throw Error(ErrorKind::Protocol, "chat endpoint returned invalid JSON");
    try {
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw Error(ErrorKind::Protocol, "chat reply content is not a string");
        return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Protocol, std::string("chat reply lacks choices[0].message.content: ") + e.what());
    }
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages, const GenerationParams& params) {
    http::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace_back("Authorization", std::string("Bearer ") + key);
    const auto body = request_body(messages, params);

    slots_.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{slots_};

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(config_.retry_backoff * attempt);
        ++attempts_;
        const auto res = transport_->post(config_.url, body, headers, config_.timeout);
        if (!res.transport_ok) {
            last_error = "transport failure: " + res.error;
        } else if (res.status == 429 || res.status >= 500) {
            last_error = "HTTP status " + std::to_string(res.status);
        } else if (res.status != 200) {
            throw Error(ErrorKind::Generation, "chat endpoint rejected the request with HTTP status " +
                                                   std::to_string(res.status));
        } else {
            return reply_content(res.body);
        }
        spdlog::debug("chat attempt {} failed: {}", attempt + 1, last_error);
    }
    throw Error(ErrorKind::Generation, "chat endpoint unreachable after " + std::to_string(config_.max_retries + 1) +
                                           " attempts: " + last_error);
}

void MockLlmClient::add_gold(std::string_view question, std::span<const std::string> answers) {
    auto& slot = gold_[text::normalize(question)];
    for (const auto& a : answers) slot.push_back(text::normalize(a));
}

std::string MockLlmClient::complete(const std::vector<ChatMessage>& messages, const GenerationParams&) {
    ++calls_;
    auto user = std::find_if(messages.rbegin(), messages.rend(), [](const auto& m) { return m.role == "user"; });
    if (user == messages.rend()) return std::string(kUnknown);
    const auto parsed = parse_prompt(user->content);
    if (!parsed) return std::string(kUnknown);
    const bool feedback = parsed->kind == PromptKind::Feedback;
    const auto it = gold_.find(text::normalize(parsed->question));
    if (it != gold_.end()) {
        for (const auto& p : parsed->paths) {
            auto terminal = path_terminal(p);
            if (std::find(it->second.begin(), it->second.end(), text::normalize(terminal)) != it->second.end())
                return feedback ? p : terminal;
        }
    }
    return std::string(feedback ? kNo : kUnknown);
}

LlmResponse generate(LlmClient& client, std::string_view prompt, const GenerationParams& params) {
    LlmResponse r;
    r.raw_text = client.complete({ChatMessage{"user", std::string(prompt)}}, params);
    const auto lines = nonblank_lines(r.raw_text);
    if (!lines.empty()) {
        for (auto& part : text::split(lines.front(), ",")) {
            auto t = text::trim(part);
            if (!t.empty()) r.extracted_answers.emplace_back(t);
        }
    }
    if (text::normalize(r.raw_text) == "no") {
        r.feedback_path = "NO";
    } else {
        for (const auto& line : lines) {
            if (line.find(kPathSeparator) != std::string::npos) {
                r.feedback_path = line;
                break;
            }
        }
    }
    return r;
}

std::optional<ComplexityLabel> parse_feedback(const LlmResponse& response, int delta) {
    if (text::normalize(response.raw_text) == "no") return std::nullopt;
    for (const auto& line : nonblank_lines(response.raw_text)) {
        const auto parts = text::split(line, kPathSeparator);
        if (parts.size() < 3 || parts.size() % 2 == 0) continue;
        const bool complete = std::all_of(parts.begin(), parts.end(), [](const auto& p) { return !text::trim(p).empty(); });
        if (!complete) continue;
        return label_query(static_cast<int>((parts.size() - 1) / 2), delta);
    }
    return std::nullopt;
}

std::string path_terminal(std::string_view path_text) {
    const auto pos = path_text.rfind(kPathSeparator);
    if (pos == std::string_view::npos) return std::string(text::trim(path_text));
    return std::string(text::trim(path_text.substr(pos + kPathSeparator.size())));
}

int hits_at_1(const LlmResponse& response, std::span<const std::string> gold) {
    if (gold.empty()) throw Error(ErrorKind::InvalidArgument, "hits@1 needs at least one gold answer");
    const auto lines = nonblank_lines(response.raw_text);
    if (lines.empty()) return 0;
    const auto reply = text::tokenize(lines.front());
    for (const auto& g : gold) {
        if (text::contains_tokens(reply, text::tokenize(g))) return 1;
    }
    return 0;
}

} // namespace kgrag
