#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgrag/kg_store.hpp"

namespace kgrag {

inline constexpr int kDefaultDelta = 2;

enum class Complexity : std::uint8_t { Simple = 0, Complex = 1 };

std::string_view to_string(Complexity c) noexcept;
std::optional<Complexity> parse_complexity(std::string_view s) noexcept;

struct ComplexityLabel {
    Complexity value = Complexity::Simple;
    std::optional<int> min_hop;

    friend bool operator==(const ComplexityLabel&, const ComplexityLabel&) = default;
};

/// Fewest hops between any query entity and any answer entity, following
/// edges in either direction. nullopt when no pair is connected. Entities
/// missing from the graph are dropped; throws Labeling if either side ends up
/// empty.
std::optional<int> compute_min_hop(const KnowledgeGraph& g, std::span<const EntityId> query_entities,
                                   std::span<const EntityId> answer_entities);
std::optional<int> compute_min_hop(const KnowledgeGraph& g, std::span<const std::string> query_entities,
                                   std::span<const std::string> answer_entities);

/// Simple iff min_hop <= delta.
ComplexityLabel label_query(int min_hop, int delta = kDefaultDelta);

// ---------------------------------------------------------------------------
// Query encoding

struct EncoderConfig {
    std::size_t dimension = std::size_t{1} << 16;
    int ngram_order = 2;

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Sparse storage of a fixed-length vector; `entries` sorted by index.
struct FeatureVector {
    std::size_t dimension = 0;
    std::vector<std::pair<std::uint32_t, double>> entries;

    std::vector<double> dense() const;
    double dot(std::span<const double> weights) const;

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Number of trailing slots reserved for statistical features: token count,
/// entity-like tokens, clause markers, "of" phrases, and five interrogative
/// flags (who, what/which, where, when, how).
inline constexpr std::size_t kStatFeatureCount = 9;

/// Hashed bag of word n-grams (L2-normalised) followed by the statistical
/// block. Throws InvalidArgument for blank text.
FeatureVector featurize(std::string_view question, const EncoderConfig& config);

/// Plug-in point for other encoders (e.g. an external embedding service).
class QueryEncoder {
public:
    virtual ~QueryEncoder() = default;
    virtual std::size_t dimension() const = 0;
    virtual FeatureVector encode(std::string_view question) const = 0;
};

class HashingEncoder final : public QueryEncoder {
public:
    explicit HashingEncoder(EncoderConfig config = {}) : config_(config) {}
    std::size_t dimension() const override { return config_.dimension; }
    FeatureVector encode(std::string_view question) const override { return featurize(question, config_); }
    const EncoderConfig& config() const noexcept { return config_; }

private:
    EncoderConfig config_;
};

// ---------------------------------------------------------------------------
// Linear decoder

/// Logistic regression over FeatureVector: p(Complex|q) = sigmoid(w.x + b).
struct ClassifierModel {
    EncoderConfig encoder;
    int delta = kDefaultDelta;
    std::vector<double> weights;
    double bias = 0.0;
    std::uint64_t version = 0;

    double logit(const FeatureVector& x) const;
    double p_complex(const FeatureVector& x) const;
};

struct LabeledQuestion {
    std::string question;
    Complexity label = Complexity::Simple;
};

struct TrainParams {
    double learning_rate = 1.0;
    int epochs = 1000;
    std::size_t batch_size = 0; ///< 0 means full batch
    double weight_decay = 0.0;
    std::uint64_t seed = 17;
};

struct TrainReport {
    std::vector<double> loss_history; ///< mean cross-entropy after each epoch
    double final_loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    ClassifierModel model;
    TrainReport report;
};

/// Throws DegenerateTraining unless both classes are present.
TrainResult train(std::span<const LabeledQuestion> data, const EncoderConfig& encoder, int delta,
                  const TrainParams& params = {});

struct Prediction {
    Complexity label = Complexity::Simple;
    double probability = 0.5; ///< of the chosen label
    double p_complex = 0.5;
};

/// argmax of p(y|q); an exact tie goes to Simple.
Prediction predict(const ClassifierModel& model, const FeatureVector& x);
Prediction predict(const ClassifierModel& model, std::string_view question);

struct AdaptParams {
    int epochs = 3;
    std::size_t batch_size = 16;
    double learning_rate = 1.0;
    double weight_decay = 0.0;
    std::uint64_t seed = 17;
};

/// Mini-batch fine-tune of a copy of `model` on refined labels. The copy's
/// version is one higher on every call. Empty feedback leaves the weights
/// unchanged.
ClassifierModel fast_adapt(const ClassifierModel& model, std::span<const LabeledQuestion> feedback,
                           const AdaptParams& params = {});

/// Number of records that may feed adaptation: ceil(ratio * n).
std::size_t adaptation_budget(double ratio, std::size_t n);

double mean_loss(const ClassifierModel& model, std::span<const LabeledQuestion> data);
double accuracy(const ClassifierModel& model, std::span<const LabeledQuestion> data);

void save_model(const ClassifierModel& model, std::ostream& out);
ClassifierModel load_model(std::istream& in);
void save_model_file(const ClassifierModel& model, const std::string& path);
ClassifierModel load_model_file(const std::string& path);

} // namespace kgrag
