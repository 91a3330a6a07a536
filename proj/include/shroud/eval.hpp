#pragma once

// Risk-identification evaluation: JSONL dataset ingestion, label matching,
// and the binary / category / severity metric tasks. Dataset schema in
// docs/dataset.md.

#include "shroud/backends.hpp"
#include "shroud/mock_backends.hpp"
#include "shroud/risk_model.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace shroud {

inline constexpr int kCategoryCount = 6;

struct GoldObject {
    std::string label;
    bool sensitive = false;
    int category = 5;        // 0..5
    int severity_likert = 1; // 1..7
};

struct EvalCase {
    std::string id;
    std::string image_path; // absolute or relative to the working directory
    std::vector<GoldObject> objects;
    std::optional<std::string> intent;
    std::optional<std::string> concern;
};

// Likert 1..low_max -> Low, ..medium_max -> Medium, rest -> High.
struct SeverityMap {
    int low_max = 2;
    int medium_max = 5;

    // "2,5"; throws InvalidParameter.
    static SeverityMap parse(std::string_view text);
    std::string to_string() const;
};

Severity map_severity(int likert, const SeverityMap& map = {});

// Dataset category index for a derived risk category.
int category_index(CategoryKind k) noexcept;

// Throws ParseError("line N: ...") or MissingImage.
std::vector<EvalCase> load_dataset(const std::string& path);
std::vector<EvalCase> parse_dataset(std::string_view text, const std::string& base_dir, bool check_images = true);

// Token-set Jaccard of lowercased alphanumeric tokens.
double label_similarity(std::string_view a, std::string_view b);

struct MatchPair {
    size_t predicted;
    size_t gold;
    double similarity;
};

struct Matching {
    std::vector<MatchPair> pairs; // in gold order
    std::vector<size_t> unmatched_predicted;
    std::vector<size_t> unmatched_gold;
};

Matching match_elements(const std::vector<std::string>& predicted, const std::vector<std::string>& gold,
                        double threshold = 0.5);

struct BinaryCounts {
    size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct TaskMetrics {
    size_t total = 0;
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;

    friend bool operator==(const TaskMetrics&, const TaskMetrics&) = default;
};

struct EvalMetrics {
    size_t cases = 0;
    size_t failed_cases = 0;
    std::vector<std::string> errors;
    BinaryCounts binary;
    TaskMetrics binary_task;
    TaskMetrics category_task;
    TaskMetrics severity_task;
    std::array<std::array<size_t, kCategoryCount>, kCategoryCount> category_confusion{}; // [gold][predicted]
    std::array<std::array<size_t, 3>, 3> severity_confusion{};                          // [gold][predicted]
    size_t matched_pairs = 0;
    size_t unmatched_gold = 0;
    size_t unmatched_predicted = 0;
    SeverityMap severity_map;
    double match_threshold = 0.5;
};

bool operator==(const BinaryCounts& a, const BinaryCounts& b);

// One predicted element as seen by the scorer.
struct PredictedObject {
    std::string label;
    int category = 5;
    Severity severity = Severity::Low;
};

std::vector<PredictedObject> predicted_objects(const RiskReport& report);

struct CaseScore {
    BinaryCounts binary;
    std::array<std::array<size_t, kCategoryCount>, kCategoryCount> category_confusion{};
    std::array<std::array<size_t, 3>, 3> severity_confusion{};
    size_t matched = 0, unmatched_gold = 0, unmatched_predicted = 0;
};

CaseScore score_case(const std::vector<PredictedObject>& predicted, const EvalCase& gold, const SeverityMap& map,
                     double threshold);

// Derives rates from counts and checks them against a brute-force recount.
EvalMetrics aggregate(const std::vector<CaseScore>& scores, const SeverityMap& map, double threshold);

struct EvalOptions {
    SeverityMap severity_map;
    double match_threshold = 0.5;
    unsigned jobs = 1;
};

EvalMetrics run_eval(const std::vector<EvalCase>& dataset, const Backends& backends, const EvalOptions& options = {});

enum class ReportFormat { Text, Json };

std::string report_metrics(const EvalMetrics& m, ReportFormat format);
nlohmann::ordered_json metrics_to_json(const EvalMetrics& m);
EvalMetrics metrics_from_json(const nlohmann::json& j);

// Risk label that the category classifier maps back to each dataset index.
std::string_view oracle_risk_label(int category);

// Scenario whose chat replies restate each case's gold annotations as an
// identification report, keyed by the case image.
MockScenario oracle_scenario(const std::vector<EvalCase>& dataset, const SeverityMap& map = {});

} // namespace shroud
