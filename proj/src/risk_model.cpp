#include "shroud/risk_model.hpp"

#include "shroud/error.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace shroud {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Lowercase, typographic apostrophes folded, punctuation to spaces, padded
// with single spaces so keywords can be matched at word starts.
std::string normalize_for_keywords(std::string_view s)
{
    std::string folded;
    for (size_t i = 0; i < s.size(); ++i) {
        if (i + 2 < s.size() && uint8_t(s[i]) == 0xE2 && uint8_t(s[i + 1]) == 0x80 &&
            (uint8_t(s[i + 2]) == 0x98 || uint8_t(s[i + 2]) == 0x99)) {
            folded.push_back('\'');
            i += 2;
            continue;
        }
        folded.push_back(s[i]);
    }
    std::string out = " ";
    for (unsigned char c : folded) {
        const char l = char(std::tolower(c));
        const bool keep = std::isalnum(c) || c == '\'';
        if (keep)
            out.push_back(l);
        else if (out.back() != ' ')
            out.push_back(' ');
    }
    if (out.back() != ' ') out.push_back(' ');
    return out;
}

struct CategoryKeywords {
    CategoryKind kind;
    std::vector<std::string_view> stems;
};

// Checked in order; the first category with a stem at a word start wins.
const std::vector<CategoryKeywords>& keyword_table()
{
    static const std::vector<CategoryKeywords> table = {
        {CategoryKind::Bystander,
         {"bystander", "others nearby", "other people", "other person", "others'", "stranger", "uninvolved",
          "third part", "people in background", "people in the background", "passerby", "passers", "acquaintance",
          "someone else", "people nearby"}},
        {CategoryKind::LocationExposure,
         {"where you", "locat", "whereabouts", "address", "landmark", "home", "neighbo", "route", "movement",
          "place", "city", "workplace", "school", "travel"}},
        {CategoryKind::ConfidentialInformationLeakage,
         {"confidential", "secret", "private data", "private info", "sensitive data", "sensitive info", "data",
          "document", "screen", "password", "financial", "bank", "credit card", "account", "leak", "client"}},
        {CategoryKind::IdentityExposure,
         {"identity", "identif", "who you are", "face", "recogni", "name", "id card", "passport", "plate"}},
        {CategoryKind::SelfDisclosure,
         {"personal", "habit", "lifestyle", "health", "medical", "hobby", "hobbies", "preference", "religio",
          "politic", "routine", "relationship", "belief", "interest", "diary", "private life", "family life"}},
    };
    return table;
}

std::optional<CategoryKind> match_keywords(const std::string& normalized)
{
    for (const auto& row : keyword_table())
        for (std::string_view stem : row.stems) {
            std::string needle = " ";
            needle += stem;
            if (normalized.find(needle) != std::string::npos) return row.kind;
        }
    return std::nullopt;
}

std::string path_of(size_t i) { return "$[" + std::to_string(i) + "]"; }

[[noreturn]] void schema(const std::string& path, const std::string& reason)
{
    fail(Errc::SchemaViolation, path + ": " + reason);
}

int64_t read_id(const json& v, const std::string& path)
{
    if (v.is_number_integer()) return v.get<int64_t>();
    if (v.is_number_unsigned()) return int64_t(v.get<uint64_t>());
    if (v.is_string()) {
        const std::string s = trim(v.get<std::string>());
        if (!s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
            return std::stoll(s);
    }
    schema(path, "expected an integer id");
}

const json& require(const json& obj, const char* key, const std::string& path)
{
    const auto it = obj.find(key);
    if (it == obj.end()) schema(path + "." + key, "missing");
    return *it;
}

std::string read_string(const json& obj, const char* key, const std::string& path, bool nonempty, bool required = true)
{
    const auto it = obj.find(key);
    if (it == obj.end()) {
        if (required) schema(path + "." + key, "missing");
        return {};
    }
    if (!it->is_string()) schema(path + "." + key, "expected a string");
    std::string s = it->get<std::string>();
    if (nonempty && trim(s).empty()) schema(path + "." + key, "must be nonempty");
    return s;
}

std::vector<std::string> read_string_list(const json& obj, const char* key, const std::string& path, bool required)
{
    const auto it = obj.find(key);
    if (it == obj.end()) {
        if (required) schema(path + "." + key, "missing");
        return {};
    }
    if (!it->is_array()) schema(path + "." + key, "expected an array of strings");
    std::vector<std::string> out;
    for (size_t i = 0; i < it->size(); ++i) {
        const json& v = (*it)[i];
        const std::string p = path + "." + key + "[" + std::to_string(i) + "]";
        if (!v.is_string()) schema(p, "expected a string");
        if (trim(v.get<std::string>()).empty()) schema(p, "must be nonempty");
        out.push_back(v.get<std::string>());
    }
    return out;
}

// Removes // and /* */ comments and trailing commas outside string literals.
std::string repair_json(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    bool in_string = false;
    for (size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            out.push_back(c);
            if (c == '\\' && i + 1 < s.size()) {
                out.push_back(s[++i]);
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
            out.push_back(c);
        } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
            while (i < s.size() && s[i] != '\n') ++i;
            out.push_back('\n');
        } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
            const auto end = s.find("*/", i + 2);
            i = end == std::string_view::npos ? s.size() : end + 1;
        } else if (c == ']' || c == '}') {
            // Drop a comma that only whitespace separates from this closer.
            size_t j = out.size();
            while (j > 0 && std::isspace(static_cast<unsigned char>(out[j - 1]))) --j;
            if (j > 0 && out[j - 1] == ',') out.erase(j - 1, 1);
            out.push_back(c);
        } else {
            out.push_back(c);
        }
    }
    return out;
}

// Span of the first balanced JSON array/object, string-aware.
std::optional<std::string_view> first_balanced(std::string_view s)
{
    const auto start = s.find_first_of("[{");
    if (start == std::string_view::npos) return std::nullopt;
    std::vector<char> stack;
    bool in_string = false;
    for (size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\')
                ++i;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '[' || c == '{') {
            stack.push_back(c == '[' ? ']' : '}');
        } else if (c == ']' || c == '}') {
            if (stack.empty() || stack.back() != c) return std::nullopt;
            stack.pop_back();
            if (stack.empty()) return s.substr(start, i - start + 1);
        }
    }
    return std::nullopt;
}

std::optional<json> try_parse(std::string_view s)
{
    json j = json::parse(s.begin(), s.end(), nullptr, false, true);
    if (j.is_discarded()) return std::nullopt;
    return j;
}

PrivacyRisk read_risk(const json& item, const std::string& path)
{
    if (!item.is_object()) schema(path, "expected an object");
    PrivacyRisk risk;
    risk.privacy_risk_id = read_id(require(item, "privacy_risk_id", path), path + ".privacy_risk_id");
    risk.label = read_string(item, "privacyRisk", path, true);
    const std::string sev = read_string(item, "severity", path, true);
    const auto parsed = parse_severity(sev);
    if (!parsed) schema(path + ".severity", "unknown severity '" + sev + "'");
    risk.severity = *parsed;
    risk.threat_actors = read_string_list(item, "threatActors", path, true);

    const json& elems = require(item, "sensitiveElements", path);
    if (!elems.is_array()) schema(path + ".sensitiveElements", "expected an array");
    if (elems.empty()) schema(path + ".sensitiveElements", "must list at least one element");
    std::vector<std::string> causes;
    for (size_t i = 0; i < elems.size(); ++i) {
        const std::string ep = path + ".sensitiveElements[" + std::to_string(i) + "]";
        const json& e = elems[i];
        if (!e.is_object()) schema(ep, "expected an object");
        ElementRef ref;
        ref.id = read_id(require(e, "id", ep), ep + ".id");
        ref.risk_cause = read_string(e, "riskCause", ep, false);
        if (const auto m = e.find("markedByUser"); m != e.end()) {
            if (!m->is_boolean()) schema(ep + ".markedByUser", "expected true/false");
            ref.marked_by_user = m->get<bool>();
        }
        causes.push_back(ref.risk_cause);
        risk.elements.push_back(std::move(ref));
    }
    risk.category = classify_category(risk.label, causes);
    return risk;
}

RiskReport read_report(const json& root)
{
    if (!root.is_array()) schema("$", "expected a JSON array of privacy risks");
    RiskReport report;
    std::set<int64_t> risk_ids;
    for (size_t i = 0; i < root.size(); ++i) {
        const std::string path = path_of(i);
        PrivacyRisk risk = read_risk(root[i], path);
        if (!risk_ids.insert(risk.privacy_risk_id).second)
            schema(path + ".privacy_risk_id", "duplicate id " + std::to_string(risk.privacy_risk_id));

        const json& elems = root[i]["sensitiveElements"];
        std::vector<ElementRef> unique_refs;
        std::set<int64_t> seen_here;
        for (size_t k = 0; k < risk.elements.size(); ++k) {
            const ElementRef& ref = risk.elements[k];
            const std::string ep = path + ".sensitiveElements[" + std::to_string(k) + "]";
            const std::string text = read_string(elems[k], "element", ep, true);
            auto [it, inserted] = report.elements.try_emplace(ref.id, SensitiveElement{ref.id, text, false});
            if (!inserted && trim(it->second.element) != trim(text))
                fail(Errc::DuplicateElementConflict, ep + ": id " + std::to_string(ref.id) + " is both '" +
                                                         it->second.element + "' and '" + text + "'");
            it->second.marked_by_user = it->second.marked_by_user || ref.marked_by_user;
            // A repeated listing inside one risk collapses into the first.
            if (seen_here.insert(ref.id).second) unique_refs.push_back(ref);
        }
        risk.elements = std::move(unique_refs);
        report.risks.push_back(std::move(risk));
    }
    return report;
}

Recommendation read_recommendation(const json& r, const std::string& path, std::vector<std::string>& warnings)
{
    if (!r.is_object()) schema(path, "expected an object");
    Recommendation rec;
    rec.element_id = read_id(require(r, "element", path), path + ".element");
    const std::string type = read_string(r, "manipulation_type", path, true);
    const auto technique = parse_technique(type);
    if (!technique) fail(Errc::UnknownTechnique, path + ".manipulation_type: '" + type + "'");
    rec.technique = *technique;
    rec.description = read_string(r, "type_description", path, false, false);
    rec.generation_prompt = read_string(r, "prompt", path, false, false);
    rec.advantages = read_string_list(r, "advantages", path, false);
    rec.disadvantages = read_string_list(r, "disadvantages", path, false);
    if (rec.technique != Technique::GenerativeReplacement && !rec.generation_prompt.empty()) {
        warnings.push_back(path + ": prompt ignored for " + std::string(technique_name(rec.technique)));
        rec.generation_prompt.clear();
    }
    return rec;
}

RecommendationSet read_recommendations(const json& root)
{
    if (!root.is_array()) schema("$", "expected a JSON array of privacy risks");
    RecommendationSet set;
    std::set<int64_t> ids;
    for (size_t i = 0; i < root.size(); ++i) {
        const std::string path = path_of(i);
        const json& item = root[i];
        if (!item.is_object()) schema(path, "expected an object");
        const int64_t id = read_id(require(item, "privacy_risk_id", path), path + ".privacy_risk_id");
        if (!ids.insert(id).second) schema(path + ".privacy_risk_id", "duplicate id " + std::to_string(id));
        const json& recs = require(item, "recommendations", path);
        if (!recs.is_array()) schema(path + ".recommendations", "expected an array");
        std::vector<Recommendation> list;
        for (size_t k = 0; k < recs.size(); ++k)
            list.push_back(read_recommendation(recs[k], path + ".recommendations[" + std::to_string(k) + "]",
                                               set.warnings));
        set.per_risk.emplace_back(id, std::move(list));
    }
    return set;
}

const char* level_name(Level3 l) { return l == Level3::High ? "High" : l == Level3::Medium ? "Medium" : "Low"; }

} // namespace

std::string_view severity_name(Severity s)
{
    switch (s) {
    case Severity::High: return "High";
    case Severity::Medium: return "Medium";
    case Severity::Low: return "Low";
    }
    return "Low";
}

std::optional<Severity> parse_severity(std::string_view text)
{
    const std::string t = lower(trim(text));
    if (t == "high") return Severity::High;
    if (t == "medium") return Severity::Medium;
    if (t == "low") return Severity::Low;
    return std::nullopt;
}

std::string_view category_name(CategoryKind k)
{
    switch (k) {
    case CategoryKind::SelfDisclosure: return "SelfDisclosure";
    case CategoryKind::IdentityExposure: return "IdentityExposure";
    case CategoryKind::ConfidentialInformationLeakage: return "ConfidentialInformationLeakage";
    case CategoryKind::LocationExposure: return "LocationExposure";
    case CategoryKind::Bystander: return "Bystander";
    case CategoryKind::Other: return "Other";
    }
    return "Other";
}

RiskCategory classify_category(std::string_view risk_label, const std::vector<std::string>& risk_causes)
{
    if (auto hit = match_keywords(normalize_for_keywords(risk_label))) return {*hit, {}};
    std::string causes;
    for (const auto& c : risk_causes) causes += c + " ";
    if (auto hit = match_keywords(normalize_for_keywords(causes))) return {*hit, {}};
    return {CategoryKind::Other, std::string(risk_label)};
}

std::string_view technique_name(Technique t)
{
    switch (t) {
    case Technique::GenerativeReplacement: return "Generative Replacement";
    case Technique::Removal: return "Removal";
    case Technique::DotRepresentation: return "Dot Representation";
    case Technique::AvatarReplacement: return "Avatar Replacement";
    case Technique::BarReplacement: return "Bar Replacement";
    case Technique::Silhouette: return "Silhouette";
    case Technique::Masking: return "Masking";
    case Technique::Pixelating: return "Pixelating";
    case Technique::Blurring: return "Blurring";
    }
    return "Blurring";
}

std::optional<Technique> parse_technique(std::string_view text)
{
    std::string key;
    for (unsigned char c : text)
        if (std::isalnum(c)) key.push_back(char(std::tolower(c)));
    static const std::vector<std::pair<std::string_view, Technique>> aliases = {
        {"generativereplacement", Technique::GenerativeReplacement},
        {"generativecontentreplacement", Technique::GenerativeReplacement},
        {"generative", Technique::GenerativeReplacement},
        {"gcr", Technique::GenerativeReplacement},
        {"removal", Technique::Removal},
        {"remove", Technique::Removal},
        {"inpainting", Technique::Removal},
        {"inpaintingremoval", Technique::Removal},
        {"dotrepresentation", Technique::DotRepresentation},
        {"dots", Technique::DotRepresentation},
        {"pointlight", Technique::DotRepresentation},
        {"pointlightreplacement", Technique::DotRepresentation},
        {"avatarreplacement", Technique::AvatarReplacement},
        {"avatar", Technique::AvatarReplacement},
        {"cartoonreplacement", Technique::AvatarReplacement},
        {"cartoon", Technique::AvatarReplacement},
        {"barreplacement", Technique::BarReplacement},
        {"bar", Technique::BarReplacement},
        {"silhouette", Technique::Silhouette},
        {"silhouettemasking", Technique::Silhouette},
        {"masking", Technique::Masking},
        {"mask", Technique::Masking},
        {"maskingcolorfilling", Technique::Masking},
        {"colorfilling", Technique::Masking},
        {"pixelating", Technique::Pixelating},
        {"pixelate", Technique::Pixelating},
        {"pixelation", Technique::Pixelating},
        {"blurring", Technique::Blurring},
        {"blur", Technique::Blurring},
    };
    for (const auto& [alias, t] : aliases)
        if (key == alias) return t;
    return std::nullopt;
}

bool is_generative(Technique t)
{
    switch (t) {
    case Technique::GenerativeReplacement:
    case Technique::Removal:
    case Technique::AvatarReplacement:
    case Technique::BarReplacement:
    case Technique::DotRepresentation: return true;
    default: return false;
    }
}

const std::array<TechniqueAttributeProfile, 9>& attribute_registry()
{
    using enum Level3;
    static const std::array<TechniqueAttributeProfile, 9> rows = {{
        {Technique::Masking, "Masking/Colorfilling", Level2::High, Detectability::Obvious, Harmony::Weak, Low,
         Realism::Unnatural, Low},
        {Technique::Silhouette, "Silhouette Masking", Level2::High, Detectability::Obvious, Harmony::Weak, Medium,
         Realism::Unnatural, Medium},
        {Technique::Blurring, "Blurring", Level2::Low, Detectability::Obvious, Harmony::Weak, High,
         Realism::Unnatural, High},
        {Technique::Pixelating, "Pixelating", Level2::Low, Detectability::Obvious, Harmony::Weak, Medium,
         Realism::Unnatural, High},
        {Technique::BarReplacement, "Bar Replacement", Level2::High, Detectability::Obvious, Harmony::Weak, Medium,
         Realism::Unnatural, Low},
        {Technique::DotRepresentation, "Point Light Replacement", Level2::High, Detectability::Obvious,
         Harmony::Weak, Medium, Realism::Unnatural, Low},
        {Technique::AvatarReplacement, "Cartoon Replacement", Level2::High, Detectability::Obvious,
         Harmony::Strong, High, Realism::Unnatural, Medium},
        {Technique::Removal, "Inpainting/Removal", Level2::High, Detectability::Subtle, Harmony::Strong, Low,
         Realism::Realistic, Low},
        {Technique::GenerativeReplacement, "Generative Content Replacement", Level2::High, Detectability::Subtle,
         Harmony::Strong, High, Realism::Realistic, Low},
    }};
    return rows;
}

const TechniqueAttributeProfile& technique_attributes(Technique t)
{
    for (const auto& row : attribute_registry())
        if (row.technique == t) return row;
    fail(Errc::UnknownTechnique, "no attribute row");
}

ordered_json to_json(const TechniqueAttributeProfile& p)
{
    ordered_json j;
    j["technique"] = technique_name(p.technique);
    j["table_row"] = p.table_row;
    j["effectiveness_vs_recognition"] = p.effectiveness_vs_recognition == Level2::High ? "High" : "Low";
    j["detectability"] = p.detectability == Detectability::Obvious ? "Obvious" : "Subtle";
    j["visual_harmony"] = p.visual_harmony == Harmony::Strong ? "Strong" : "Weak";
    j["narrative_coherence"] = level_name(p.narrative_coherence);
    j["realism"] = p.realism == Realism::Realistic ? "Realistic" : "Unnatural";
    j["vulnerability"] = level_name(p.vulnerability);
    return j;
}

const PrivacyRisk* RiskReport::find_risk(int64_t id) const
{
    for (const auto& r : risks)
        if (r.privacy_risk_id == id) return &r;
    return nullptr;
}

json extract_json(std::string_view text)
{
    if (auto j = try_parse(text)) return *j;

    std::string_view body = text;
    if (const auto fence = text.find("```"); fence != std::string_view::npos) {
        auto start = text.find('\n', fence);
        start = start == std::string_view::npos ? fence + 3 : start + 1;
        const auto end = text.find("```", start);
        body = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        if (auto j = try_parse(body)) return *j;
    }
    const std::string repaired = repair_json(body);
    if (auto j = try_parse(repaired)) return *j;
    if (const auto span = first_balanced(repaired))
        if (auto j = try_parse(*span)) return *j;
    fail(Errc::NotJson, "no parsable JSON document in model output");
}

RiskReport parse_risk_report(std::string_view text) { return read_report(extract_json(text)); }

RecommendationSet parse_recommendations(std::string_view text) { return read_recommendations(extract_json(text)); }

AnnotatedRiskReport merge_recommendations(const RiskReport& report, const RecommendationSet& recs)
{
    AnnotatedRiskReport out;
    out.elements = report.elements;
    out.warnings = recs.warnings;
    for (const auto& risk : report.risks) out.risks.push_back({risk, {}});

    for (const auto& [risk_id, list] : recs.per_risk) {
        auto target = std::find_if(out.risks.begin(), out.risks.end(),
                                   [&](const AnnotatedRisk& a) { return a.risk.privacy_risk_id == risk_id; });
        if (target == out.risks.end()) fail(Errc::UnknownRiskId, "recommendations for unknown risk " + std::to_string(risk_id));
        std::map<int64_t, int> per_element;
        for (const Recommendation& rec : list) {
            if (!report.elements.count(rec.element_id))
                fail(Errc::UnknownElementId, "risk " + std::to_string(risk_id) + " recommends for unknown element " +
                                                 std::to_string(rec.element_id));
            const bool listed = std::any_of(target->risk.elements.begin(), target->risk.elements.end(),
                                            [&](const ElementRef& e) { return e.id == rec.element_id; });
            if (!listed)
                out.warnings.push_back("risk " + std::to_string(risk_id) + ": element " +
                                       std::to_string(rec.element_id) + " is not listed under this risk");
            if (++per_element[rec.element_id] > 2) {
                out.warnings.push_back("risk " + std::to_string(risk_id) + ": dropped extra recommendation (" +
                                       std::string(technique_name(rec.technique)) + ") for element " +
                                       std::to_string(rec.element_id));
                continue;
            }
            target->recommendations.push_back(rec);
        }
    }

    std::vector<int64_t> gaps;
    for (const auto& a : out.risks)
        if (a.recommendations.empty()) gaps.push_back(a.risk.privacy_risk_id);
    if (!gaps.empty()) {
        std::string ids;
        for (auto id : gaps) ids += (ids.empty() ? "" : ",") + std::to_string(id);
        fail(Errc::CoverageGap, "risks without recommendations: " + ids);
    }
    return out;
}

namespace {

ordered_json risk_to_json(const PrivacyRisk& risk, const std::map<int64_t, SensitiveElement>& registry,
                          bool with_category)
{
    ordered_json j;
    j["privacy_risk_id"] = risk.privacy_risk_id;
    j["privacyRisk"] = risk.label;
    if (with_category) j["category"] = category_name(risk.category.kind);
    j["severity"] = severity_name(risk.severity);
    j["threatActors"] = risk.threat_actors;
    ordered_json elems = ordered_json::array();
    for (const auto& ref : risk.elements) {
        ordered_json e;
        e["id"] = ref.id;
        const auto it = registry.find(ref.id);
        e["element"] = it == registry.end() ? std::string() : it->second.element;
        e["riskCause"] = ref.risk_cause;
        e["markedByUser"] = ref.marked_by_user;
        elems.push_back(std::move(e));
    }
    j["sensitiveElements"] = std::move(elems);
    return j;
}

} // namespace

ordered_json to_json(const Recommendation& rec)
{
    ordered_json r;
    r["element"] = rec.element_id;
    r["manipulation_type"] = technique_name(rec.technique);
    r["type_description"] = rec.description;
    r["prompt"] = rec.generation_prompt;
    r["advantages"] = rec.advantages;
    r["disadvantages"] = rec.disadvantages;
    return r;
}

ordered_json to_json(const RiskReport& report)
{
    ordered_json arr = ordered_json::array();
    for (const auto& risk : report.risks) arr.push_back(risk_to_json(risk, report.elements, false));
    return arr;
}

std::string serialize_report(const RiskReport& report) { return to_json(report).dump(2); }

ordered_json to_json(const AnnotatedRiskReport& report)
{
    ordered_json arr = ordered_json::array();
    for (const auto& a : report.risks) {
        ordered_json j = risk_to_json(a.risk, report.elements, true);
        ordered_json recs = ordered_json::array();
        for (const auto& rec : a.recommendations) recs.push_back(to_json(rec));
        j["recommendations"] = std::move(recs);
        arr.push_back(std::move(j));
    }
    return arr;
}

std::string serialize_annotated(const AnnotatedRiskReport& report) { return to_json(report).dump(2); }

ordered_json to_json(const RecommendationSet& recs)
{
    ordered_json arr = ordered_json::array();
    for (const auto& [id, list] : recs.per_risk) {
        ordered_json j;
        j["privacy_risk_id"] = id;
        ordered_json items = ordered_json::array();
        for (const auto& rec : list) items.push_back(to_json(rec));
        j["recommendations"] = std::move(items);
        arr.push_back(std::move(j));
    }
    return arr;
}

AnnotatedRiskReport parse_annotated(std::string_view text)
{
    const json root = extract_json(text);
    const RiskReport report = read_report(root);
    const RecommendationSet recs = read_recommendations(root);
    if (report.empty()) return {};
    return merge_recommendations(report, recs);
}

RiskReport strip_recommendations(const AnnotatedRiskReport& report)
{
    RiskReport out;
    out.elements = report.elements;
    for (const auto& a : report.risks) out.risks.push_back(a.risk);
    return out;
}

} // namespace shroud
