#pragma once

// The external model roles behind the pipeline. Each role is an interface with
// an HTTP client (http_backends.hpp) and a deterministic offline mock
// (mock_backends.hpp) obeying the same contract.

#include "shroud/image.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shroud {

struct PromptBundle;

enum class BackendRole { Chat, Detector, Grounder, Segmenter, Pose, Generator };

std::string_view role_name(BackendRole role);
std::optional<BackendRole> parse_role(std::string_view text);

struct BackendConfig {
    BackendRole role = BackendRole::Chat;
    std::string endpoint;       // full URL, e.g. https://host/v1/chat/completions
    std::string token_env;      // name of the env var holding the bearer token; empty for none
    std::string model;          // chat model name; ignored by other roles
    double timeout_seconds = 60;
    int retry_count = 1;        // 0..3

    // Throws InvalidParameter on out-of-range values.
    void validate() const;
};

struct Detection {
    std::string label;
    BoundingBox box;
    double confidence = 0;
};

struct GroundedBox {
    BoundingBox box;
    double confidence = 0;
};

// COCO keypoint order.
inline constexpr std::array<std::string_view, 17> kKeypointNames = {
    "nose",       "left_eye",    "right_eye",  "left_ear",   "right_ear",  "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist", "left_hip",
    "right_hip",  "left_knee",   "right_knee", "left_ankle", "right_ankle",
};

// Standard COCO limb pairs (0-based indices into kKeypointNames).
inline constexpr std::array<std::pair<int, int>, 19> kSkeletonPairs = {{
    {15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12}, {5, 6}, {5, 7}, {6, 8},
    {7, 9},   {8, 10},  {1, 2},   {0, 1},   {0, 2},   {1, 3},  {2, 4},  {3, 5}, {4, 6},
}};

struct Keypoint {
    double x = 0;
    double y = 0;
    bool visible = false;
};

struct PoseKeypoints {
    std::array<Keypoint, 17> points{};

    size_t visible_count() const noexcept;
    // Marks points outside the image invisible.
    void clip_to(uint32_t width, uint32_t height) noexcept;
};

struct GenerationRequest {
    const ImageBuffer& image;
    const RegionMask& mask;
    std::string prompt;
    const ImageBuffer* reference = nullptr;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string chat(const PromptBundle& bundle) const = 0;
};

class DetectorBackend {
public:
    virtual ~DetectorBackend() = default;
    virtual std::vector<Detection> detect(const ImageBuffer& img) const = 0;
};

class GrounderBackend {
public:
    virtual ~GrounderBackend() = default;
    // Confidence-sorted, descending.
    virtual std::vector<GroundedBox> ground(const ImageBuffer& img, std::string_view phrase) const = 0;
};

class SegmenterBackend {
public:
    virtual ~SegmenterBackend() = default;
    virtual Contour segment(const ImageBuffer& img, const BoundingBox& box) const = 0;
};

class PoseBackend {
public:
    virtual ~PoseBackend() = default;
    virtual PoseKeypoints estimate(const ImageBuffer& img, const BoundingBox& box) const = 0;
};

class GeneratorBackend {
public:
    virtual ~GeneratorBackend() = default;
    // Returns a full-size image; callers only trust pixels inside their (dilated) mask.
    virtual ImageBuffer generate(const GenerationRequest& request) const = 0;
};

struct Backends {
    std::shared_ptr<const ChatBackend> chat;
    std::shared_ptr<const DetectorBackend> detector;
    std::shared_ptr<const GrounderBackend> grounder;
    std::shared_ptr<const SegmenterBackend> segmenter;
    std::shared_ptr<const PoseBackend> pose;
    std::shared_ptr<const GeneratorBackend> generator;
};

// Contract wrappers shared by every implementation: validate preconditions,
// then post-process the backend answer. These are the entry points the
// pipeline and engine call.
std::string chat_multimodal(const Backends& b, const PromptBundle& bundle);
std::vector<Detection> detect_objects(const Backends& b, const ImageBuffer& img);
std::vector<GroundedBox> ground_phrase(const Backends& b, const ImageBuffer& img, std::string_view phrase);
Contour segment(const Backends& b, const ImageBuffer& img, const BoundingBox& box);
PoseKeypoints estimate_pose(const Backends& b, const ImageBuffer& img, const BoundingBox& box);
ImageBuffer generate_fill(const Backends& b, const ImageBuffer& img, const RegionMask& mask, std::string_view prompt,
                          const ImageBuffer* reference = nullptr);

// The segmenter result may not leave the box grown by this fraction per side.
inline constexpr double kSegmentBoxSlack = 0.10;

} // namespace shroud
