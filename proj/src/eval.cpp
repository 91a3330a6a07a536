#include "shroud/eval.hpp"

#include "shroud/codec.hpp"
#include "shroud/error.hpp"
#include "shroud/hash.hpp"
#include "shroud/session.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>
#include <thread>

namespace shroud {

using nlohmann::json;
using nlohmann::ordered_json;

namespace fs = std::filesystem;

namespace {

std::set<std::string> tokens(std::string_view s)
{
    std::set<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            cur.push_back(char(std::tolower(c)));
        } else if (!cur.empty()) {
            out.insert(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.insert(cur);
    return out;
}

std::optional<double> ratio(size_t num, size_t den)
{
    if (den == 0) return std::nullopt;
    return double(num) / double(den);
}

std::optional<double> mean_of(const std::vector<double>& v)
{
    if (v.empty()) return std::nullopt;
    double s = 0;
    for (double x : v) s += x;
    return s / double(v.size());
}

[[noreturn]] void line_error(size_t line, const std::string& what)
{
    fail(Errc::ParseError, "line " + std::to_string(line) + ": " + what);
}

int int_field(const json& o, const char* key, size_t line)
{
    if (!o.contains(key)) line_error(line, std::string("missing \"") + key + "\"");
    const json& v = o.at(key);
    if (!v.is_number_integer()) line_error(line, std::string("\"") + key + "\" must be an integer");
    return int(v.get<int64_t>());
}

std::optional<std::string> opt_text(const json& o, const char* key, size_t line)
{
    if (!o.contains(key) || o.at(key).is_null()) return std::nullopt;
    if (!o.at(key).is_string()) line_error(line, std::string("\"") + key + "\" must be a string");
    return o.at(key).get<std::string>();
}

json opt_pct(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_opt(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

std::string pct(const std::optional<double>& v)
{
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v * 100.0);
    return buf;
}

} // namespace

bool operator==(const BinaryCounts& a, const BinaryCounts& b)
{
    return a.tp == b.tp && a.fp == b.fp && a.tn == b.tn && a.fn == b.fn;
}

SeverityMap SeverityMap::parse(std::string_view text)
{
    const auto comma = text.find(',');
    auto num = [&](std::string_view s) {
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
            fail(Errc::InvalidParameter, "severity map must look like \"2,5\"");
        return std::stoi(std::string(s));
    };
    if (comma == std::string_view::npos) fail(Errc::InvalidParameter, "severity map must look like \"2,5\"");
    SeverityMap m{num(text.substr(0, comma)), num(text.substr(comma + 1))};
    if (!(1 <= m.low_max && m.low_max < m.medium_max && m.medium_max < 7))
        fail(Errc::InvalidParameter, "severity map needs 1 <= low_max < medium_max < 7");
    return m;
}

std::string SeverityMap::to_string() const { return std::to_string(low_max) + "," + std::to_string(medium_max); }

Severity map_severity(int likert, const SeverityMap& map)
{
    if (likert < 1 || likert > 7) fail(Errc::OutOfRange, "severity " + std::to_string(likert) + " is outside 1..7");
    if (likert <= map.low_max) return Severity::Low;
    if (likert <= map.medium_max) return Severity::Medium;
    return Severity::High;
}

int category_index(CategoryKind k) noexcept
{
    switch (k) {
    case CategoryKind::IdentityExposure: return 0;
    case CategoryKind::LocationExposure: return 1;
    case CategoryKind::SelfDisclosure: return 2;
    case CategoryKind::Bystander: return 3;
    case CategoryKind::ConfidentialInformationLeakage: return 4;
    case CategoryKind::Other: return 5;
    }
    return 5;
}

std::string_view oracle_risk_label(int category)
{
    static constexpr std::array<std::string_view, kCategoryCount> labels = {
        "Reveals your identity", "Reveals where you are", "Reveals personal details",
        "Shows others nearby",   "Exposes private data",  "Raises other concerns",
    };
    return labels.at(size_t(category));
}

std::vector<EvalCase> parse_dataset(std::string_view text, const std::string& base_dir, bool check_images)
{
    std::vector<EvalCase> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(raw, nullptr, false);
        if (j.is_discarded() || !j.is_object()) line_error(line, "not a JSON object");
        EvalCase c;
        c.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : "line" + std::to_string(line);
        const auto image = opt_text(j, "image", line);
        if (!image || image->empty()) line_error(line, "missing \"image\"");
        fs::path p(*image);
        if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
        c.image_path = p.lexically_normal().string();
        c.intent = opt_text(j, "intent", line);
        c.concern = opt_text(j, "concern", line);
        if (!j.contains("objects") || !j["objects"].is_array()) line_error(line, "\"objects\" must be an array");
        for (const auto& o : j["objects"]) {
            if (!o.is_object()) line_error(line, "object entries must be objects");
            GoldObject g;
            const auto label = opt_text(o, "label", line);
            if (!label || label->empty()) line_error(line, "object without \"label\"");
            g.label = *label;
            if (!o.contains("sensitive") || !o["sensitive"].is_boolean()) line_error(line, "\"sensitive\" must be a boolean");
            g.sensitive = o["sensitive"].get<bool>();
            g.category = int_field(o, "category", line);
            if (g.category < 0 || g.category >= kCategoryCount) line_error(line, "category must be within 0..5");
            g.severity_likert = int_field(o, "severity", line);
            if (g.severity_likert < 1 || g.severity_likert > 7) line_error(line, "severity must be within 1..7");
            c.objects.push_back(std::move(g));
        }
        if (check_images && !fs::exists(c.image_path)) fail(Errc::MissingImage, "line " + std::to_string(line) + ": " + c.image_path);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<EvalCase> load_dataset(const std::string& path)
{
    std::vector<uint8_t> bytes;
    try {
        bytes = read_file(path);
    } catch (const Error& e) {
        fail(Errc::ParseError, "cannot read dataset: " + e.detail());
    }
    return parse_dataset(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                         fs::path(path).parent_path().string());
}

double label_similarity(std::string_view a, std::string_view b)
{
    const auto ta = tokens(a), tb = tokens(b);
    if (ta.empty() && tb.empty()) return 0;
    size_t inter = 0;
    for (const auto& t : ta) inter += tb.count(t);
    return double(inter) / double(ta.size() + tb.size() - inter);
}

Matching match_elements(const std::vector<std::string>& predicted, const std::vector<std::string>& gold, double threshold)
{
    struct Cand {
        double sim;
        size_t g, p;
    };
    std::vector<Cand> cands;
    for (size_t g = 0; g < gold.size(); ++g)
        for (size_t p = 0; p < predicted.size(); ++p) {
            const double s = label_similarity(predicted[p], gold[g]);
            if (s >= threshold && s > 0) cands.push_back({s, g, p});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        if (a.g != b.g) return a.g < b.g;
        return a.p < b.p;
    });
    std::vector<bool> gused(gold.size()), pused(predicted.size());
    Matching m;
    for (const auto& c : cands)
        if (!gused[c.g] && !pused[c.p]) {
            gused[c.g] = pused[c.p] = true;
            m.pairs.push_back({c.p, c.g, c.sim});
        }
    std::sort(m.pairs.begin(), m.pairs.end(), [](const MatchPair& a, const MatchPair& b) { return a.gold < b.gold; });
    for (size_t g = 0; g < gold.size(); ++g)
        if (!gused[g]) m.unmatched_gold.push_back(g);
    for (size_t p = 0; p < predicted.size(); ++p)
        if (!pused[p]) m.unmatched_predicted.push_back(p);
    return m;
}

std::vector<PredictedObject> predicted_objects(const RiskReport& report)
{
    std::vector<PredictedObject> out;
    for (const auto& [id, el] : report.elements) {
        PredictedObject p{el.element, 5, Severity::Low};
        bool first = true;
        for (const auto& risk : report.risks)
            for (const auto& ref : risk.elements)
                if (ref.id == id) {
                    if (first) p.category = category_index(risk.category.kind);
                    if (first || int(risk.severity) > int(p.severity)) p.severity = risk.severity;
                    first = false;
                }
        out.push_back(std::move(p));
    }
    return out;
}

CaseScore score_case(const std::vector<PredictedObject>& predicted, const EvalCase& gold, const SeverityMap& map,
                     double threshold)
{
    std::vector<std::string> pl, gl;
    for (const auto& p : predicted) pl.push_back(p.label);
    for (const auto& g : gold.objects) gl.push_back(g.label);
    const Matching m = match_elements(pl, gl, threshold);

    CaseScore s;
    for (const auto& pair : m.pairs) {
        const GoldObject& g = gold.objects[pair.gold];
        const PredictedObject& p = predicted[pair.predicted];
        (g.sensitive ? s.binary.tp : s.binary.fp)++;
        s.category_confusion[size_t(g.category)][size_t(p.category)]++;
        if (g.sensitive) s.severity_confusion[size_t(map_severity(g.severity_likert, map))][size_t(p.severity)]++;
    }
    for (size_t g : m.unmatched_gold) (gold.objects[g].sensitive ? s.binary.fn : s.binary.tn)++;
    s.binary.fp += m.unmatched_predicted.size();
    s.matched = m.pairs.size();
    s.unmatched_gold = m.unmatched_gold.size();
    s.unmatched_predicted = m.unmatched_predicted.size();
    return s;
}

namespace {

template <size_t N>
void macro_rates(const std::array<std::array<size_t, N>, N>& conf, TaskMetrics& t)
{
    size_t total = 0, correct = 0;
    std::vector<double> precisions, recalls;
    for (size_t c = 0; c < N; ++c) {
        size_t row = 0, col = 0;
        for (size_t k = 0; k < N; ++k) {
            row += conf[c][k];
            col += conf[k][c];
        }
        total += row;
        correct += conf[c][c];
        if (col) precisions.push_back(double(conf[c][c]) / double(col));
        if (row) recalls.push_back(double(conf[c][c]) / double(row));
    }
    t.total = total;
    t.accuracy = ratio(correct, total);
    t.precision = mean_of(precisions);
    t.recall = mean_of(recalls);
}

} // namespace

EvalMetrics aggregate(const std::vector<CaseScore>& scores, const SeverityMap& map, double threshold)
{
    EvalMetrics m;
    m.severity_map = map;
    m.match_threshold = threshold;
    for (const auto& s : scores) {
        m.binary.tp += s.binary.tp;
        m.binary.fp += s.binary.fp;
        m.binary.tn += s.binary.tn;
        m.binary.fn += s.binary.fn;
        for (size_t i = 0; i < kCategoryCount; ++i)
            for (size_t j = 0; j < kCategoryCount; ++j) m.category_confusion[i][j] += s.category_confusion[i][j];
        for (size_t i = 0; i < 3; ++i)
            for (size_t j = 0; j < 3; ++j) m.severity_confusion[i][j] += s.severity_confusion[i][j];
        m.matched_pairs += s.matched;
        m.unmatched_gold += s.unmatched_gold;
        m.unmatched_predicted += s.unmatched_predicted;
    }
    const auto& b = m.binary;
    m.binary_task.total = b.tp + b.fp + b.tn + b.fn;
    m.binary_task.accuracy = ratio(b.tp + b.tn, m.binary_task.total);
    m.binary_task.precision = ratio(b.tp, b.tp + b.fp);
    m.binary_task.recall = ratio(b.tp, b.tp + b.fn);
    macro_rates(m.category_confusion, m.category_task);
    macro_rates(m.severity_confusion, m.severity_task);
    // The severity task reports accuracy only.
    m.severity_task.precision.reset();
    m.severity_task.recall.reset();

    // Brute-force recount of the binary identities.
    size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& s : scores) {
        for (size_t i = 0; i < s.binary.tp; ++i) ++tp;
        for (size_t i = 0; i < s.binary.fp; ++i) ++fp;
        for (size_t i = 0; i < s.binary.tn; ++i) ++tn;
        for (size_t i = 0; i < s.binary.fn; ++i) ++fn;
    }
    const size_t n = tp + fp + tn + fn;
    if (n != m.binary_task.total || (n && *m.binary_task.accuracy != double(tp + tn) / double(n)) ||
        (tp + fn && *m.binary_task.recall != double(tp) / double(tp + fn)))
        fail(Errc::IntegrityFailure, "metric identities do not hold");
    return m;
}

EvalMetrics run_eval(const std::vector<EvalCase>& dataset, const Backends& backends, const EvalOptions& options)
{
    std::vector<std::optional<CaseScore>> scores(dataset.size());
    std::vector<std::string> errors(dataset.size());

    auto run_one = [&](size_t i) {
        const EvalCase& c = dataset[i];
        try {
            const ImageBuffer img = load_image(read_file(c.image_path));
            UserContext ctx;
            ctx.sharing_intent = c.intent;
            ctx.privacy_concern = c.concern;
            const RiskReport report = run_identification(backends, img, ctx);
            scores[i] = score_case(predicted_objects(report), c, options.severity_map, options.match_threshold);
        } catch (const Error& e) {
            errors[i] = c.id + ": " + e.what();
        } catch (const std::exception& e) {
            errors[i] = c.id + ": " + e.what();
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, unsigned(dataset.size())));
    if (jobs <= 1) {
        for (size_t i = 0; i < dataset.size(); ++i) run_one(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (size_t i; (i = next++) < dataset.size();) run_one(i);
            });
        for (auto& th : pool) th.join();
    }

    std::vector<CaseScore> ok;
    for (const auto& s : scores)
        if (s) ok.push_back(*s);
    EvalMetrics m = aggregate(ok, options.severity_map, options.match_threshold);
    m.cases = dataset.size();
    for (const auto& e : errors)
        if (!e.empty()) m.errors.push_back(e);
    m.failed_cases = m.errors.size();
    return m;
}

ordered_json metrics_to_json(const EvalMetrics& m)
{
    auto task = [](const TaskMetrics& t) {
        return ordered_json{{"total", t.total}, {"accuracy", opt_pct(t.accuracy)}, {"precision", opt_pct(t.precision)},
                            {"recall", opt_pct(t.recall)}};
    };
    ordered_json j;
    j["cases"] = m.cases;
    j["failed_cases"] = m.failed_cases;
    j["errors"] = m.errors;
    j["object_sensitivity"] = task(m.binary_task);
    j["object_sensitivity"]["counts"] = {{"tp", m.binary.tp}, {"fp", m.binary.fp}, {"tn", m.binary.tn}, {"fn", m.binary.fn}};
    j["risk_category"] = task(m.category_task);
    j["risk_category"]["confusion"] = m.category_confusion;
    j["severity"] = task(m.severity_task);
    j["severity"]["confusion"] = m.severity_confusion;
    j["matching"] = {{"threshold", m.match_threshold},
                     {"matched_pairs", m.matched_pairs},
                     {"unmatched_gold", m.unmatched_gold},
                     {"unmatched_predicted", m.unmatched_predicted}};
    j["severity_map"] = m.severity_map.to_string();
    j["category_table"] = kCategoryTableVersion;
    return j;
}

EvalMetrics metrics_from_json(const json& j)
{
    try {
        auto task = [](const json& t) {
            TaskMetrics out;
            out.total = t.at("total").get<size_t>();
            out.accuracy = read_opt(t, "accuracy");
            out.precision = read_opt(t, "precision");
            out.recall = read_opt(t, "recall");
            return out;
        };
        EvalMetrics m;
        m.cases = j.at("cases").get<size_t>();
        m.failed_cases = j.at("failed_cases").get<size_t>();
        m.errors = j.at("errors").get<std::vector<std::string>>();
        m.binary_task = task(j.at("object_sensitivity"));
        const json& c = j.at("object_sensitivity").at("counts");
        m.binary = {c.at("tp").get<size_t>(), c.at("fp").get<size_t>(), c.at("tn").get<size_t>(), c.at("fn").get<size_t>()};
        m.category_task = task(j.at("risk_category"));
        m.category_confusion = j.at("risk_category").at("confusion").get<decltype(m.category_confusion)>();
        m.severity_task = task(j.at("severity"));
        m.severity_confusion = j.at("severity").at("confusion").get<decltype(m.severity_confusion)>();
        m.match_threshold = j.at("matching").at("threshold").get<double>();
        m.matched_pairs = j.at("matching").at("matched_pairs").get<size_t>();
        m.unmatched_gold = j.at("matching").at("unmatched_gold").get<size_t>();
        m.unmatched_predicted = j.at("matching").at("unmatched_predicted").get<size_t>();
        m.severity_map = SeverityMap::parse(j.at("severity_map").get<std::string>());
        return m;
    } catch (const json::exception& e) {
        fail(Errc::ParseError, std::string("metrics JSON: ") + e.what());
    }
}

std::string report_metrics(const EvalMetrics& m, ReportFormat format)
{
    if (format == ReportFormat::Json) return metrics_to_json(m).dump(2) + "\n";
    char line[160];
    std::string out;
    std::snprintf(line, sizeof line, "%-28s %14s %14s %14s\n", "Task", "Accuracy (%)", "Precision (%)", "Recall (%)");
    out += line;
    auto row = [&](const char* name, const TaskMetrics& t) {
        std::snprintf(line, sizeof line, "%-28s %14s %14s %14s\n", name, pct(t.accuracy).c_str(), pct(t.precision).c_str(),
                      pct(t.recall).c_str());
        out += line;
    };
    row("Object sensitivity(binary)", m.binary_task);
    row("Risk category(multi-class)", m.category_task);
    row("Severity(High/Med/Low)", m.severity_task);
    std::snprintf(line, sizeof line,
                  "\ncases %zu, failed %zu; TP %zu FP %zu TN %zu FN %zu; matched %zu, unmatched gold %zu, unmatched "
                  "predicted %zu\nseverity map %s, match threshold %.2f\n",
                  m.cases, m.failed_cases, m.binary.tp, m.binary.fp, m.binary.tn, m.binary.fn, m.matched_pairs,
                  m.unmatched_gold, m.unmatched_predicted, m.severity_map.to_string().c_str(), m.match_threshold);
    out += line;
    return out;
}

MockScenario oracle_scenario(const std::vector<EvalCase>& dataset, const SeverityMap& map)
{
    MockScenario s;
    for (const auto& c : dataset) {
        RiskReport report;
        int64_t next_id = 1;
        for (const auto& g : c.objects) {
            if (!g.sensitive) continue;
            const int64_t id = next_id++;
            PrivacyRisk risk;
            risk.privacy_risk_id = id;
            risk.label = std::string(oracle_risk_label(g.category));
            risk.severity = map_severity(g.severity_likert, map);
            risk.threat_actors = {"public users"};
            risk.elements.push_back({id, "annotated as sensitive", false});
            report.risks.push_back(std::move(risk));
            report.elements[id] = {id, g.label, false};
        }
        const std::string hash = image_hash(load_image(read_file(c.image_path)));
        auto [it, inserted] = s.images.try_emplace(hash);
        if (!inserted) fail(Errc::InvalidParameter, "oracle needs distinct images; " + c.id + " repeats one");
        it->second.identification = {serialize_report(report)};
    }
    return s;
}

} // namespace shroud
