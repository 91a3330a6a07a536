#pragma once

// Data model for the structured model output: identified privacy risks, their
// sensitive elements, per-element obfuscation recommendations, and the
// technique attribute registry shown next to each recommendation.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace shroud {

enum class Severity { Low = 0, Medium = 1, High = 2 };

std::string_view severity_name(Severity s);
std::optional<Severity> parse_severity(std::string_view text);

enum class CategoryKind { SelfDisclosure, IdentityExposure, ConfidentialInformationLeakage, LocationExposure, Bystander, Other };

struct RiskCategory {
    CategoryKind kind = CategoryKind::Other;
    std::string label; // only meaningful for Other

    friend bool operator==(const RiskCategory&, const RiskCategory&) = default;
};

std::string_view category_name(CategoryKind k);

// Version tag of the keyword table behind classify_category.
inline constexpr std::string_view kCategoryTableVersion = "keywords-v1";

RiskCategory classify_category(std::string_view risk_label, const std::vector<std::string>& risk_causes = {});

enum class Technique {
    GenerativeReplacement,
    Removal,
    DotRepresentation,
    AvatarReplacement,
    BarReplacement,
    Silhouette,
    Masking,
    Pixelating,
    Blurring,
};

inline constexpr std::array<Technique, 9> kAllTechniques = {
    Technique::GenerativeReplacement, Technique::Removal,    Technique::DotRepresentation,
    Technique::AvatarReplacement,     Technique::BarReplacement, Technique::Silhouette,
    Technique::Masking,               Technique::Pixelating, Technique::Blurring,
};

// Display name as used by the recommendation output ("Generative Replacement", ...).
std::string_view technique_name(Technique t);
// Case-insensitive; also accepts identifier-style and short CLI aliases.
std::optional<Technique> parse_technique(std::string_view text);
// Techniques that call the generation backend.
bool is_generative(Technique t);

enum class Level3 { High, Medium, Low };
enum class Level2 { High, Low };
enum class Detectability { Obvious, Subtle };
enum class Harmony { Strong, Weak };
enum class Realism { Realistic, Unnatural };

struct TechniqueAttributeProfile {
    Technique technique;
    std::string_view table_row; // row label as printed in the literature table
    Level2 effectiveness_vs_recognition;
    Detectability detectability;
    Harmony visual_harmony;
    Level3 narrative_coherence;
    Realism realism;
    Level3 vulnerability;
};

const TechniqueAttributeProfile& technique_attributes(Technique t);
const std::array<TechniqueAttributeProfile, 9>& attribute_registry();
nlohmann::ordered_json to_json(const TechniqueAttributeProfile& p);

// One element as listed under a single risk.
struct ElementRef {
    int64_t id = 0;
    std::string risk_cause;
    bool marked_by_user = false;
};

// Deduplicated registry entry.
struct SensitiveElement {
    int64_t id = 0;
    std::string element;
    bool marked_by_user = false; // true if any listing marks it
};

struct PrivacyRisk {
    int64_t privacy_risk_id = 0;
    std::string label;
    RiskCategory category;
    Severity severity = Severity::Low;
    std::vector<std::string> threat_actors;
    std::vector<ElementRef> elements;
};

struct RiskReport {
    std::vector<PrivacyRisk> risks;
    std::map<int64_t, SensitiveElement> elements;

    const PrivacyRisk* find_risk(int64_t id) const;
    bool empty() const noexcept { return risks.empty(); }
};

struct Recommendation {
    int64_t element_id = 0;
    Technique technique = Technique::Blurring;
    std::string description;
    std::string generation_prompt;
    std::vector<std::string> advantages;
    std::vector<std::string> disadvantages;
};

struct RecommendationSet {
    // Keyed by privacy_risk_id, in the order the model returned them.
    std::vector<std::pair<int64_t, std::vector<Recommendation>>> per_risk;
    std::vector<std::string> warnings;
};

struct AnnotatedRisk {
    PrivacyRisk risk;
    std::vector<Recommendation> recommendations;
};

struct AnnotatedRiskReport {
    std::vector<AnnotatedRisk> risks;
    std::map<int64_t, SensitiveElement> elements;
    std::vector<std::string> warnings;

    bool empty() const noexcept { return risks.empty(); }
};

// Tolerant extraction: one fenced block or surrounding prose is stripped,
// comments and trailing commas are repaired. Throws NotJson when nothing parses.
nlohmann::json extract_json(std::string_view text);

RiskReport parse_risk_report(std::string_view text);
RecommendationSet parse_recommendations(std::string_view text);
AnnotatedRiskReport merge_recommendations(const RiskReport& report, const RecommendationSet& recs);

// Canonical serialization in the identification output shape.
nlohmann::ordered_json to_json(const RiskReport& report);
std::string serialize_report(const RiskReport& report);
// Identification shape plus "category" and "recommendations" per risk.
nlohmann::ordered_json to_json(const AnnotatedRiskReport& report);
std::string serialize_annotated(const AnnotatedRiskReport& report);
AnnotatedRiskReport parse_annotated(std::string_view text);
// Recommendation output shape.
nlohmann::ordered_json to_json(const RecommendationSet& recs);
nlohmann::ordered_json to_json(const Recommendation& rec);

RiskReport strip_recommendations(const AnnotatedRiskReport& report);

} // namespace shroud
