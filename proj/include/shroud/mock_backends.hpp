#pragma once

// Deterministic offline implementations of every backend role. All answers
// come from a MockScenario keyed by image content hash (see docs/wire.md for
// the scenario file schema), so a scenario file fully pins a test run.

#include "shroud/backends.hpp"

#include <json.hpp>

#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace shroud {

struct MockImageFixture {
    std::vector<Detection> detections;
    // Lowercased phrase -> boxes.
    std::map<std::string, std::vector<GroundedBox>> grounding;
    std::vector<std::pair<BoundingBox, Contour>> segments;
    std::vector<std::pair<BoundingBox, PoseKeypoints>> poses;
    // Canned chat replies by expected schema; successive calls walk the list
    // and repeat the last entry.
    std::vector<std::string> identification;
    std::vector<std::string> recommendation;
};

struct MockScenario {
    std::map<std::string, MockImageFixture> images; // by image_hash
    std::map<std::string, std::string> chat;        // by bundle_hash
    std::vector<std::string> refused_prompt_terms;  // generator refuses prompts containing any
    std::string default_chat_reply = "[]";

    static MockScenario from_json(const nlohmann::json& j);
    static MockScenario load(const std::string& path);
    nlohmann::json to_json() const;
};

class MockChat : public ChatBackend {
public:
    explicit MockChat(std::shared_ptr<const MockScenario> scenario) : scenario_(std::move(scenario)) {}
    std::string chat(const PromptBundle& bundle) const override;
    size_t calls() const;

private:
    std::shared_ptr<const MockScenario> scenario_;
    mutable std::mutex mu_;
    mutable std::map<std::string, size_t> cursor_;
    mutable size_t calls_ = 0;
};

class MockDetector : public DetectorBackend {
public:
    explicit MockDetector(std::shared_ptr<const MockScenario> scenario) : scenario_(std::move(scenario)) {}
    std::vector<Detection> detect(const ImageBuffer& img) const override;

private:
    std::shared_ptr<const MockScenario> scenario_;
};

class MockGrounder : public GrounderBackend {
public:
    explicit MockGrounder(std::shared_ptr<const MockScenario> scenario) : scenario_(std::move(scenario)) {}
    std::vector<GroundedBox> ground(const ImageBuffer& img, std::string_view phrase) const override;

private:
    std::shared_ptr<const MockScenario> scenario_;
};

// Returns the fixture polygon for a matching box (IoU >= 0.5), else the box's own rectangle.
class MockSegmenter : public SegmenterBackend {
public:
    explicit MockSegmenter(std::shared_ptr<const MockScenario> scenario) : scenario_(std::move(scenario)) {}
    Contour segment(const ImageBuffer& img, const BoundingBox& box) const override;

private:
    std::shared_ptr<const MockScenario> scenario_;
};

// Fixture keypoints for a matching box; NoPersonDetected otherwise.
class MockPose : public PoseBackend {
public:
    explicit MockPose(std::shared_ptr<const MockScenario> scenario) : scenario_(std::move(scenario)) {}
    PoseKeypoints estimate(const ImageBuffer& img, const BoundingBox& box) const override;

private:
    std::shared_ptr<const MockScenario> scenario_;
};

struct RecordedGeneration {
    std::string prompt;
    std::string reference_hash; // empty when no reference image was sent
    size_t mask_pixels = 0;
};

// Fills the whole canvas with a 4 px two-colour checkerboard whose colours
// derive from the prompt hash. Only the masked part is ever meant to be used.
class MockGenerator : public GeneratorBackend {
public:
    explicit MockGenerator(std::shared_ptr<const MockScenario> scenario) : scenario_(std::move(scenario)) {}
    ImageBuffer generate(const GenerationRequest& request) const override;
    std::vector<RecordedGeneration> requests() const;

    static ImageBuffer checkerboard(uint32_t width, uint32_t height, std::string_view prompt);

private:
    std::shared_ptr<const MockScenario> scenario_;
    mutable std::mutex mu_;
    mutable std::vector<RecordedGeneration> log_;
};

struct MockBackends {
    Backends backends;
    std::shared_ptr<MockChat> chat;
    std::shared_ptr<MockGenerator> generator;
};

MockBackends make_mock_backends(std::shared_ptr<const MockScenario> scenario);

} // namespace shroud
