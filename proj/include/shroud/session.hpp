#pragma once

// One image-editing session: analysis, element localization, edits with
// exact undo/redo, and export. Mutations are serialized per session; reads
// take a shared lock. Only one analysis may run at a time.

#include "shroud/backends.hpp"
#include "shroud/codec.hpp"
#include "shroud/error.hpp"
#include "shroud/obfuscation.hpp"
#include "shroud/prompt.hpp"
#include "shroud/risk_model.hpp"

#include <json.hpp>

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace shroud {

struct EditRecord {
    uint64_t seq = 0;
    Technique technique = Technique::Blurring;
    // Report linkage; both empty for ad-hoc edits.
    std::optional<int64_t> risk_id;
    std::optional<int64_t> element_id;
    std::optional<size_t> instance;
    TechniqueParams params;
    std::string pre_hash;
    std::string post_hash;
    std::string timestamp; // UTC, ISO 8601

    std::shared_ptr<const ImageBuffer> pre;
    std::shared_ptr<const ImageBuffer> post;
    std::shared_ptr<const RegionMask> mask;

    nlohmann::ordered_json to_json() const;
};

struct LocatedInstance {
    BoundingBox box;
    double confidence = 0;
    Contour contour;
};

struct ElementSelection {
    int64_t element_id = 0;
    std::string element;
    std::vector<LocatedInstance> instances; // confidence-sorted
    std::vector<std::string> errors;
};

using Selections = std::map<int64_t, ElementSelection>;

nlohmann::ordered_json to_json(const Selections& selections);

struct ApplyRequest {
    std::optional<int64_t> risk_id;
    std::optional<int64_t> element_id;
    Technique technique = Technique::Blurring;
    std::optional<TechniqueParams> params; // defaults for the technique when absent
    std::optional<size_t> instance;        // index into the element's located instances; default 0
    std::optional<RegionMask> custom_mask; // overrides the located contour
};

struct ExportResult {
    std::vector<uint8_t> image;
    std::string sidecar; // {report, edits, tool_version}
};

class Session {
public:
    Session(std::string id, Backends backends);

    const std::string& id() const noexcept { return id_; }

    // Replaces the image and resets report, selections, and history.
    void set_image(ImageBuffer img);
    void set_context(std::optional<std::string> intent, std::optional<std::string> concern);
    // An empty mask clears the concern region.
    void set_concern_mask(RegionMask mask);

    AnnotatedRiskReport analyze();
    Selections locate_elements();
    EditRecord apply_recommendation(const ApplyRequest& request);
    EditRecord apply_adhoc(Technique technique, const RegionMask& mask, const TechniqueParams& params);
    void undo();
    void redo();
    ExportResult export_image(ImageFormat format) const;
    // Rebuilds the current image from the original and the history, verifying every hash.
    ImageBuffer replay() const;

    ImageBuffer current() const;
    ImageBuffer original() const;
    bool has_image() const;
    std::optional<AnnotatedRiskReport> report() const;
    Selections selections() const;
    std::vector<EditRecord> history() const;
    size_t redo_depth() const;
    uint64_t version() const;
    UserContext context() const;
    std::string sidecar_json() const;

private:
    EditRecord commit(EditRecord record, const RegionMask& mask, const ImageBuffer& post);
    void require_image() const;

    const std::string id_;
    const Backends backends_;

    mutable std::shared_mutex mu_;
    std::atomic<bool> analyzing_{false};

    std::optional<ImageBuffer> original_;
    std::optional<ImageBuffer> current_;
    UserContext context_;
    std::optional<PreScan> prescan_;
    std::optional<AnnotatedRiskReport> report_;
    Selections selections_;
    std::vector<EditRecord> history_;
    std::vector<EditRecord> redo_;
    uint64_t version_ = 0;
    uint64_t next_seq_ = 1;
};

// The pipeline stages behind Session::analyze, usable without a session.
struct AnalysisResult {
    PreScan prescan;
    AnnotatedRiskReport report;
};

AnalysisResult run_analysis(const Backends& backends, const ImageBuffer& img, const UserContext& ctx);
// Identification only: detection, pre-scan, prompt, chat, parse (one retry), severity escalation.
RiskReport run_identification(const Backends& backends, const ImageBuffer& img, const UserContext& ctx,
                              PreScan* prescan_out = nullptr);
// Raises risks that own a user-marked element to High; returns the escalated risk ids.
std::vector<int64_t> escalate_marked(RiskReport& report);

bool is_parse_error(Errc code) noexcept;

} // namespace shroud
