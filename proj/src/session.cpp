#include "shroud/session.hpp"

#include "shroud/error.hpp"
#include "shroud/hash.hpp"
#include "shroud/version.hpp"
#include "shroud/wire.hpp"

#include <chrono>
#include <ctime>
#include <mutex>

namespace shroud {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string utc_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, int(ms));
    return out;
}

template <typename F>
auto with_parse_retry(F&& attempt)
{
    try {
        return attempt();
    } catch (const Error& e) {
        if (!is_parse_error(e.code())) throw;
    }
    return attempt();
}

struct InFlight {
    std::atomic<bool>& flag;
    explicit InFlight(std::atomic<bool>& f) : flag(f)
    {
        if (flag.exchange(true)) fail(Errc::AnalyzeInFlight, "an analysis is already running for this session");
    }
    ~InFlight() { flag = false; }
};

bool is_classical(Technique t) { return !is_generative(t); }

} // namespace

bool is_parse_error(Errc code) noexcept
{
    switch (code) {
    case Errc::NotJson:
    case Errc::SchemaViolation:
    case Errc::DuplicateElementConflict:
    case Errc::UnknownTechnique:
    case Errc::UnknownRiskId:
    case Errc::UnknownElementId:
    case Errc::CoverageGap: return true;
    default: return false;
    }
}

ordered_json EditRecord::to_json() const
{
    ordered_json j;
    j["seq"] = seq;
    j["technique"] = technique_name(technique);
    if (element_id) {
        j["target"] = {{"kind", "element"},
                       {"risk_id", risk_id ? ordered_json(*risk_id) : ordered_json(nullptr)},
                       {"element_id", *element_id},
                       {"instance", instance ? ordered_json(*instance) : ordered_json(nullptr)}};
    } else {
        j["target"] = {{"kind", "adhoc"}};
    }
    j["params"] = params_to_json(params);
    j["pre_hash"] = pre_hash;
    j["post_hash"] = post_hash;
    j["timestamp"] = timestamp;
    j["mask_png_base64"] = mask ? wire::mask_to_base64_png(*mask) : std::string();
    return j;
}

ordered_json to_json(const Selections& selections)
{
    ordered_json arr = ordered_json::array();
    for (const auto& [id, sel] : selections) {
        ordered_json inst = ordered_json::array();
        for (const auto& i : sel.instances) {
            const json c = wire::contour_to_flat_json(i.contour);
            inst.push_back({{"box", wire::box_to_json(i.box)},
                            {"confidence", i.confidence},
                            {"contour", {{"points", c["points"]}, {"holes", c["holes"]}}}});
        }
        arr.push_back({{"element_id", id}, {"element", sel.element}, {"instances", inst}, {"errors", sel.errors}});
    }
    return arr;
}

std::vector<int64_t> escalate_marked(RiskReport& report)
{
    std::vector<int64_t> raised;
    for (auto& risk : report.risks) {
        bool marked = false;
        for (const auto& e : risk.elements) {
            const auto it = report.elements.find(e.id);
            marked = marked || e.marked_by_user || (it != report.elements.end() && it->second.marked_by_user);
        }
        if (marked && risk.severity != Severity::High) {
            risk.severity = Severity::High;
            raised.push_back(risk.privacy_risk_id);
        }
    }
    return raised;
}

RiskReport run_identification(const Backends& backends, const ImageBuffer& img, const UserContext& ctx,
                              PreScan* prescan_out)
{
    PreScan scan = build_prescan(img, detect_objects(backends, img));
    const PromptBundle bundle = build_identification_prompt(ctx, scan, img);
    RiskReport report = with_parse_retry([&] { return parse_risk_report(chat_multimodal(backends, bundle)); });
    escalate_marked(report);
    if (prescan_out) *prescan_out = std::move(scan);
    return report;
}

AnalysisResult run_analysis(const Backends& backends, const ImageBuffer& img, const UserContext& ctx)
{
    AnalysisResult out{PreScan{{}, img, "[]"}, {}};
    RiskReport report = run_identification(backends, img, ctx, &out.prescan);
    if (report.empty()) return out;

    const PromptBundle bundle = build_recommendation_prompt(ctx, report, img);
    out.report = with_parse_retry(
        [&] { return merge_recommendations(report, parse_recommendations(chat_multimodal(backends, bundle))); });
    return out;
}

Session::Session(std::string id, Backends backends) : id_(std::move(id)), backends_(std::move(backends)) {}

void Session::require_image() const
{
    if (!current_) fail(Errc::ImageMissing, "no image uploaded");
}

void Session::set_image(ImageBuffer img)
{
    std::unique_lock lock(mu_);
    if (context_.concern_mask &&
        (context_.concern_mask->width() != img.width() || context_.concern_mask->height() != img.height()))
        context_.concern_mask.reset();
    original_ = img;
    current_ = std::move(img);
    prescan_.reset();
    report_.reset();
    selections_.clear();
    history_.clear();
    redo_.clear();
    ++version_;
}

void Session::set_context(std::optional<std::string> intent, std::optional<std::string> concern)
{
    std::unique_lock lock(mu_);
    context_.sharing_intent = std::move(intent);
    context_.privacy_concern = std::move(concern);
    ++version_;
}

void Session::set_concern_mask(RegionMask mask)
{
    std::unique_lock lock(mu_);
    require_image();
    if (mask.width() != current_->width() || mask.height() != current_->height())
        fail(Errc::DimensionMismatch, "annotation mask does not match the image size");
    if (mask.empty())
        context_.concern_mask.reset();
    else
        context_.concern_mask = std::move(mask);
    ++version_;
}

AnnotatedRiskReport Session::analyze()
{
    InFlight guard(analyzing_);
    ImageBuffer img(1, 1);
    UserContext ctx;
    {
        std::shared_lock lock(mu_);
        require_image();
        img = *current_;
        ctx = context_;
    }
    AnalysisResult result = run_analysis(backends_, img, ctx);
    std::unique_lock lock(mu_);
    prescan_ = std::move(result.prescan);
    report_ = result.report;
    selections_.clear();
    ++version_;
    return result.report;
}

Selections Session::locate_elements()
{
    ImageBuffer img(1, 1);
    std::map<int64_t, SensitiveElement> elements;
    {
        std::shared_lock lock(mu_);
        require_image();
        if (!report_) fail(Errc::ReportMissing, "run analyze before locating elements");
        img = *current_;
        elements = report_->elements;
    }
    Selections out;
    for (const auto& [id, el] : elements) {
        ElementSelection sel{id, el.element, {}, {}};
        try {
            for (const auto& g : ground_phrase(backends_, img, el.element)) {
                try {
                    sel.instances.push_back({g.box, g.confidence, segment(backends_, img, g.box)});
                } catch (const Error& e) {
                    sel.errors.push_back(std::string(errc_name(e.code())) + ": " + e.detail());
                }
            }
            if (sel.instances.empty() && sel.errors.empty()) sel.errors.push_back("could not locate \"" + el.element + "\"");
        } catch (const Error& e) {
            sel.errors.push_back(std::string(errc_name(e.code())) + ": " + e.detail());
        }
        out.emplace(id, std::move(sel));
    }
    std::unique_lock lock(mu_);
    selections_ = out;
    ++version_;
    return out;
}

EditRecord Session::commit(EditRecord record, const RegionMask& mask, const ImageBuffer& post)
{
    record.seq = next_seq_++;
    record.pre = std::make_shared<const ImageBuffer>(*current_);
    record.post = std::make_shared<const ImageBuffer>(post);
    record.mask = std::make_shared<const RegionMask>(mask);
    record.pre_hash = image_hash(*record.pre);
    record.post_hash = image_hash(post);
    record.timestamp = utc_now();
    current_ = post;
    history_.push_back(record);
    redo_.clear();
    ++version_;
    return record;
}

EditRecord Session::apply_recommendation(const ApplyRequest& req)
{
    std::unique_lock lock(mu_);
    require_image();
    EditRecord record;
    record.technique = req.technique;
    record.risk_id = req.risk_id;
    record.element_id = req.element_id;
    TechniqueParams params = req.params ? *req.params : default_params(req.technique);

    if (req.risk_id || req.element_id) {
        if (!report_) fail(Errc::ReportMissing, "no report to link the edit to");
        if (req.risk_id) {
            const auto* risk = [&]() -> const AnnotatedRisk* {
                for (const auto& r : report_->risks)
                    if (r.risk.privacy_risk_id == *req.risk_id) return &r;
                return nullptr;
            }();
            if (!risk) fail(Errc::UnknownRiskId, "risk " + std::to_string(*req.risk_id) + " is not in the report");
            if (req.element_id) {
                bool owned = false;
                for (const auto& e : risk->risk.elements) owned = owned || e.id == *req.element_id;
                if (!owned)
                    fail(Errc::UnknownElementId, "element " + std::to_string(*req.element_id) + " is not listed under risk " +
                                                     std::to_string(*req.risk_id));
            }
            // Recommended generation prompts fill in an empty prompt.
            if (auto* gp = std::get_if<GenerativeParams>(&params); gp && gp->prompt.empty() && req.element_id)
                for (const auto& rec : risk->recommendations)
                    if (rec.element_id == *req.element_id && rec.technique == Technique::GenerativeReplacement &&
                        !rec.generation_prompt.empty()) {
                        gp->prompt = rec.generation_prompt;
                        break;
                    }
        } else if (!report_->elements.count(*req.element_id)) {
            fail(Errc::UnknownElementId, "element " + std::to_string(*req.element_id) + " is not in the report");
        }
    }

    RegionMask mask(1, 1);
    if (req.custom_mask) {
        mask = selection_mask(*req.custom_mask, current_->width(), current_->height());
    } else {
        if (!req.element_id) fail(Errc::NoSelection, "give an element or a mask");
        const auto it = selections_.find(*req.element_id);
        if (it == selections_.end() || it->second.instances.empty())
            fail(Errc::NoSelection, "element " + std::to_string(*req.element_id) + " has no located region");
        const size_t index = req.instance.value_or(0);
        if (index >= it->second.instances.size())
            fail(Errc::NoSelection, "element " + std::to_string(*req.element_id) + " has " +
                                        std::to_string(it->second.instances.size()) + " instances");
        record.instance = index;
        mask = rasterize_contour(it->second.instances[index].contour, current_->width(), current_->height());
    }
    record.params = params;
    const ImageBuffer post = apply(req.technique, *current_, mask, params, backends_);
    return commit(std::move(record), mask, post);
}

EditRecord Session::apply_adhoc(Technique technique, const RegionMask& mask, const TechniqueParams& params)
{
    std::unique_lock lock(mu_);
    require_image();
    const RegionMask m = selection_mask(mask, current_->width(), current_->height());
    if (m.empty()) fail(Errc::EmptyMask, "selection is empty");
    EditRecord record;
    record.technique = technique;
    record.params = params;
    const ImageBuffer post = apply(technique, *current_, m, params, backends_);
    return commit(std::move(record), m, post);
}

void Session::undo()
{
    std::unique_lock lock(mu_);
    if (history_.empty()) fail(Errc::NothingToUndo, "history is empty");
    EditRecord rec = history_.back();
    if (image_hash(*rec.pre) != rec.pre_hash) fail(Errc::IntegrityFailure, "pre-image snapshot hash mismatch");
    history_.pop_back();
    current_ = *rec.pre;
    redo_.push_back(std::move(rec));
    ++version_;
}

void Session::redo()
{
    std::unique_lock lock(mu_);
    if (redo_.empty()) fail(Errc::NothingToRedo, "nothing to redo");
    EditRecord rec = redo_.back();
    if (image_hash(*current_) != rec.pre_hash) fail(Errc::IntegrityFailure, "current image does not match the edit's pre-image");
    if (image_hash(*rec.post) != rec.post_hash) fail(Errc::IntegrityFailure, "post-image snapshot hash mismatch");
    redo_.pop_back();
    current_ = *rec.post;
    history_.push_back(std::move(rec));
    ++version_;
}

ImageBuffer Session::replay() const
{
    std::shared_lock lock(mu_);
    require_image();
    ImageBuffer img = *original_;
    for (const auto& rec : history_) {
        if (image_hash(img) != rec.pre_hash)
            fail(Errc::IntegrityFailure, "edit " + std::to_string(rec.seq) + " does not start from the replayed image");
        if (is_classical(rec.technique)) {
            img = apply(rec.technique, img, *rec.mask, rec.params, Backends{});
            if (image_hash(img) != rec.post_hash)
                fail(Errc::IntegrityFailure, "edit " + std::to_string(rec.seq) + " does not replay bit-exactly");
        } else {
            img = *rec.post;
        }
    }
    return img;
}

std::string Session::sidecar_json() const
{
    std::shared_lock lock(mu_);
    ordered_json j;
    j["report"] = report_ ? to_json(*report_) : ordered_json(nullptr);
    ordered_json edits = ordered_json::array();
    for (const auto& r : history_) edits.push_back(r.to_json());
    j["edits"] = edits;
    j["tool_version"] = kToolVersion;
    return j.dump(2);
}

ExportResult Session::export_image(ImageFormat format) const
{
    ImageBuffer img(1, 1);
    {
        std::shared_lock lock(mu_);
        require_image();
        img = *current_;
    }
    return {save_image(img, format), sidecar_json()};
}

ImageBuffer Session::current() const
{
    std::shared_lock lock(mu_);
    require_image();
    return *current_;
}

ImageBuffer Session::original() const
{
    std::shared_lock lock(mu_);
    require_image();
    return *original_;
}

bool Session::has_image() const
{
    std::shared_lock lock(mu_);
    return current_.has_value();
}

std::optional<AnnotatedRiskReport> Session::report() const
{
    std::shared_lock lock(mu_);
    return report_;
}

Selections Session::selections() const
{
    std::shared_lock lock(mu_);
    return selections_;
}

std::vector<EditRecord> Session::history() const
{
    std::shared_lock lock(mu_);
    return history_;
}

size_t Session::redo_depth() const
{
    std::shared_lock lock(mu_);
    return redo_.size();
}

uint64_t Session::version() const
{
    std::shared_lock lock(mu_);
    return version_;
}

UserContext Session::context() const
{
    std::shared_lock lock(mu_);
    return context_;
}

} // namespace shroud
