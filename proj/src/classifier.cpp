#include "kgrag/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "kgrag/error.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

std::string_view to_string(Complexity c) noexcept {
    return c == Complexity::Simple ? "simple" : "complex";
}

std::optional<Complexity> parse_complexity(std::string_view s) noexcept {
    auto t = text::normalize(s);
    if (t == "simple" || t == "0") return Complexity::Simple;
    if (t == "complex" || t == "1") return Complexity::Complex;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Hop labelling

std::optional<int> compute_min_hop(const KnowledgeGraph& g, std::span<const EntityId> query_entities,
                                   std::span<const EntityId> answer_entities) {
    std::vector<std::uint8_t> is_answer(g.entity_count(), 0);
    std::size_t answers = 0;
    for (auto a : answer_entities) {
        if (index(a) < g.entity_count()) {
            is_answer[index(a)] = 1;
            ++answers;
        }
    }
    std::vector<int> dist(g.entity_count(), -1);
    std::deque<EntityId> queue;
    for (auto q : query_entities) {
        if (index(q) < g.entity_count() && dist[index(q)] < 0) {
            dist[index(q)] = 0;
            queue.push_back(q);
        }
    }
    if (queue.empty() || answers == 0)
        throw Error(ErrorKind::Labeling, "query or answer entity set is empty after dropping unknown entities");

    while (!queue.empty()) {
        auto v = queue.front();
        queue.pop_front();
        if (is_answer[index(v)]) return dist[index(v)];
        for (const auto& a : g.arcs(v)) {
            if (dist[index(a.neighbor)] < 0) {
                dist[index(a.neighbor)] = dist[index(v)] + 1;
                queue.push_back(a.neighbor);
            }
        }
    }
    return std::nullopt;
}

std::optional<int> compute_min_hop(const KnowledgeGraph& g, std::span<const std::string> query_entities,
                                   std::span<const std::string> answer_entities) {
    auto q = resolve_entities(g, query_entities);
    auto a = resolve_entities(g, answer_entities);
    return compute_min_hop(g, q, a);
}

ComplexityLabel label_query(int min_hop, int delta) {
    if (min_hop < 0) throw Error(ErrorKind::InvalidArgument, "min_hop must be nonnegative");
    return ComplexityLabel{min_hop <= delta ? Complexity::Simple : Complexity::Complex, min_hop};
}

// ---------------------------------------------------------------------------
// Encoding

std::vector<double> FeatureVector::dense() const {
    std::vector<double> out(dimension, 0.0);
    for (auto [i, v] : entries) out[i] = v;
    return out;
}

double FeatureVector::dot(std::span<const double> weights) const {
    double s = 0.0;
    for (auto [i, v] : entries) s += weights[i] * v;
    return s;
}

namespace {

const std::vector<std::string_view> kClauseMarkers = {"and", "that", "which", "whose", "then",
                                                      "also", "but", "while", "where", "who"};

double capped(std::size_t count, double cap) {
    return std::min(static_cast<double>(count), cap) / cap;
}

} // namespace

FeatureVector featurize(std::string_view question, const EncoderConfig& config) {
    if (config.dimension <= kStatFeatureCount + 1)
        throw Error(ErrorKind::InvalidArgument, "encoder dimension too small");
    if (config.ngram_order < 1) throw Error(ErrorKind::InvalidArgument, "n-gram order must be positive");
    auto trimmed = text::trim(question);
    if (trimmed.empty()) throw Error(ErrorKind::InvalidArgument, "question text is empty");

    const auto tokens = text::tokenize(trimmed);
    const std::size_t buckets = config.dimension - kStatFeatureCount;

    std::map<std::uint32_t, double> counts;
    for (int n = 1; n <= config.ngram_order; ++n) {
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string gram = std::to_string(n);
            for (int j = 0; j < n; ++j) {
                gram.push_back(' ');
                gram += tokens[i + j];
            }
            counts[static_cast<std::uint32_t>(text::fnv1a(gram) % buckets)] += 1.0;
        }
    }
    double norm = 0.0;
    for (const auto& [i, c] : counts) norm += c * c;
    norm = std::sqrt(norm);

    FeatureVector fv;
    fv.dimension = config.dimension;
    fv.entries.reserve(counts.size() + kStatFeatureCount);
    for (const auto& [i, c] : counts) fv.entries.emplace_back(i, c / norm);

    // Raw words keep their case for the entity heuristic.
    std::size_t entity_like = 0;
    std::size_t clauses = 0;
    {
        std::istringstream words{std::string(trimmed)};
        std::string w;
        bool first = true;
        while (words >> w) {
            clauses += static_cast<std::size_t>(std::count(w.begin(), w.end(), ',') +
                                                std::count(w.begin(), w.end(), ';'));
            bool upper = std::isupper(static_cast<unsigned char>(w.front())) != 0;
            bool digit = std::any_of(w.begin(), w.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
            if (!first && (upper || digit)) ++entity_like;
            first = false;
        }
    }
    std::size_t of_phrases = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == "of") ++of_phrases;
        if (i > 0 && std::find(kClauseMarkers.begin(), kClauseMarkers.end(), tokens[i]) != kClauseMarkers.end())
            ++clauses;
    }
    const std::string lead = tokens.empty() ? std::string{} : tokens.front();

    // Block norm is at most 1 so the whole vector stays bounded.
    const double scale = 1.0 / 3.0;
    const double stats[kStatFeatureCount] = {
        capped(tokens.size(), 40.0),
        capped(entity_like, 8.0),
        capped(clauses, 8.0),
        capped(of_phrases, 8.0),
        lead == "who" ? 1.0 : 0.0,
        (lead == "what" || lead == "which") ? 1.0 : 0.0,
        lead == "where" ? 1.0 : 0.0,
        lead == "when" ? 1.0 : 0.0,
        lead == "how" ? 1.0 : 0.0,
    };
    for (std::size_t i = 0; i < kStatFeatureCount; ++i) {
        if (stats[i] != 0.0)
            fv.entries.emplace_back(static_cast<std::uint32_t>(buckets + i), stats[i] * scale);
    }
    return fv;
}

// ---------------------------------------------------------------------------
// Model

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// -log p(y|x) for logit z.
double cross_entropy(double z, Complexity y) {
    const double s = y == Complexity::Complex ? -z : z;
    return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

double target(Complexity y) { return y == Complexity::Complex ? 1.0 : 0.0; }

struct Encoded {
    FeatureVector x;
    Complexity y;
};

std::vector<Encoded> encode_all(std::span<const LabeledQuestion> data, const EncoderConfig& config) {
    std::vector<Encoded> out;
    out.reserve(data.size());
    for (const auto& d : data) out.push_back(Encoded{featurize(d.question, config), d.label});
    return out;
}

double mean_loss_encoded(const ClassifierModel& m, const std::vector<Encoded>& data) {
    if (data.empty()) return 0.0;
    double total = 0.0;
    for (const auto& d : data) total += cross_entropy(m.logit(d.x), d.y);
    return total / static_cast<double>(data.size());
}

// One gradient step on data[idx...] of the mean cross-entropy.
void gradient_step(ClassifierModel& m, const std::vector<Encoded>& data, std::span<const std::size_t> batch,
                   double lr, double decay) {
    std::map<std::uint32_t, double> grad;
    double grad_bias = 0.0;
    for (auto i : batch) {
        const auto& d = data[i];
        const double r = sigmoid(m.logit(d.x)) - target(d.y);
        grad_bias += r;
        for (auto [j, v] : d.x.entries) grad[j] += r * v;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    if (decay != 0.0) {
        for (auto& w : m.weights) w -= lr * decay * w;
    }
    for (const auto& [j, g] : grad) m.weights[j] -= lr * g * inv;
    m.bias -= lr * grad_bias * inv;
}

void run_epochs(ClassifierModel& m, const std::vector<Encoded>& data, int epochs, std::size_t batch_size,
                double lr, double decay, std::uint64_t seed, std::vector<double>* history) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    const bool full = batch_size == 0 || batch_size >= data.size();
    for (int e = 0; e < epochs; ++e) {
        if (full) {
            gradient_step(m, data, order, lr, decay);
        } else {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t start = 0; start < order.size(); start += batch_size) {
                const auto len = std::min(batch_size, order.size() - start);
                gradient_step(m, data, std::span<const std::size_t>(order).subspan(start, len), lr, decay);
            }
        }
        if (history) history->push_back(mean_loss_encoded(m, data));
    }
}

} // namespace

double ClassifierModel::logit(const FeatureVector& x) const {
    if (x.dimension != weights.size())
        throw Error(ErrorKind::InvalidArgument, "feature dimension does not match the model");
    return x.dot(weights) + bias;
}

double ClassifierModel::p_complex(const FeatureVector& x) const {
    // Clamp so both class probabilities stay strictly inside (0, 1).
    return sigmoid(std::clamp(logit(x), -30.0, 30.0));
}

TrainResult train(std::span<const LabeledQuestion> data, const EncoderConfig& encoder, int delta,
                  const TrainParams& params) {
    const auto complex_count = std::count_if(data.begin(), data.end(),
                                             [](const auto& d) { return d.label == Complexity::Complex; });
    if (complex_count == 0 || static_cast<std::size_t>(complex_count) == data.size())
        throw Error(ErrorKind::DegenerateTraining, "training data must contain both simple and complex questions");
    if (params.epochs <= 0 || params.learning_rate <= 0.0)
        throw Error(ErrorKind::InvalidArgument, "epochs and learning rate must be positive");

    TrainResult result;
    result.model.encoder = encoder;
    result.model.delta = delta;
    result.model.weights.assign(encoder.dimension, 0.0);

    const auto encoded = encode_all(data, encoder);
    run_epochs(result.model, encoded, params.epochs, params.batch_size, params.learning_rate,
               params.weight_decay, params.seed, &result.report.loss_history);
    result.report.final_loss = result.report.loss_history.back();
    result.report.accuracy = accuracy(result.model, data);
    return result;
}

Prediction predict(const ClassifierModel& model, const FeatureVector& x) {
    Prediction p;
    p.p_complex = model.p_complex(x);
    p.label = p.p_complex > 0.5 ? Complexity::Complex : Complexity::Simple;
    p.probability = p.label == Complexity::Complex ? p.p_complex : 1.0 - p.p_complex;
    return p;
}

Prediction predict(const ClassifierModel& model, std::string_view question) {
    return predict(model, featurize(question, model.encoder));
}

ClassifierModel fast_adapt(const ClassifierModel& model, std::span<const LabeledQuestion> feedback,
                           const AdaptParams& params) {
    ClassifierModel adapted = model;
    adapted.version = model.version + 1;
    if (feedback.empty()) {
        spdlog::debug("fast_adapt called with empty feedback; weights left unchanged");
        return adapted;
    }
    const auto encoded = encode_all(feedback, model.encoder);
    run_epochs(adapted, encoded, params.epochs, params.batch_size, params.learning_rate, params.weight_decay,
               params.seed, nullptr);
    return adapted;
}

std::size_t adaptation_budget(double ratio, std::size_t n) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error(ErrorKind::InvalidArgument, "ratio must lie in [0, 1]");
    return static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n)));
}

double mean_loss(const ClassifierModel& model, std::span<const LabeledQuestion> data) {
    return mean_loss_encoded(model, encode_all(data, model.encoder));
}

double accuracy(const ClassifierModel& model, std::span<const LabeledQuestion> data) {
    if (data.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& d : data) correct += predict(model, d.question).label == d.label ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Persistence. Doubles are written as hex floats so a load is bit-exact.

namespace {

constexpr std::string_view kMagic = "kgrag-classifier";
constexpr int kFormatVersion = 1;

std::string hexfloat(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw Error(ErrorKind::Parse, "bad number in model file: " + s);
    return v;
}

template <typename T>
T expect_field(std::istream& in, std::string_view key) {
    std::string k;
    T v{};
    if (!(in >> k >> v) || k != key)
        throw Error(ErrorKind::Parse, "model file: expected field '" + std::string(key) + "'");
    return v;
}

} // namespace

void save_model(const ClassifierModel& model, std::ostream& out) {
    std::size_t nonzero = std::count_if(model.weights.begin(), model.weights.end(), [](double w) { return w != 0.0; });
    out << kMagic << ' ' << kFormatVersion << '\n'
        << "dimension " << model.encoder.dimension << '\n'
        << "ngram_order " << model.encoder.ngram_order << '\n'
        << "delta " << model.delta << '\n'
        << "version " << model.version << '\n'
        << "bias " << hexfloat(model.bias) << '\n'
        << "weights " << nonzero << '\n';
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        if (model.weights[i] != 0.0) out << i << ' ' << hexfloat(model.weights[i]) << '\n';
    }
}

ClassifierModel load_model(std::istream& in) {
    std::string magic;
    int format = 0;
    if (!(in >> magic >> format) || magic != kMagic)
        throw Error(ErrorKind::Parse, "not a classifier model file");
    if (format != kFormatVersion)
        throw Error(ErrorKind::Parse, "unsupported model format version " + std::to_string(format));
    ClassifierModel m;
    m.encoder.dimension = expect_field<std::size_t>(in, "dimension");
    m.encoder.ngram_order = expect_field<int>(in, "ngram_order");
    m.delta = expect_field<int>(in, "delta");
    m.version = expect_field<std::uint64_t>(in, "version");
    m.bias = parse_double(expect_field<std::string>(in, "bias"));
    const auto nonzero = expect_field<std::size_t>(in, "weights");
    if (m.encoder.dimension <= kStatFeatureCount + 1) throw Error(ErrorKind::Parse, "model dimension too small");
    m.weights.assign(m.encoder.dimension, 0.0);
    for (std::size_t n = 0; n < nonzero; ++n) {
        std::size_t i = 0;
        std::string v;
        if (!(in >> i >> v) || i >= m.weights.size()) throw Error(ErrorKind::Parse, "model file: bad weight entry");
        m.weights[i] = parse_double(v);
    }
    return m;
}

void save_model_file(const ClassifierModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write model file: " + path);
    save_model(model, out);
}

ClassifierModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open model file: " + path);
    return load_model(in);
}

} // namespace kgrag
