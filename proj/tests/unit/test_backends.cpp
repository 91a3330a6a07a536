#include "expect.hpp"
#include "testkit.hpp"

#include "shroud/codec.hpp"
#include "shroud/hash.hpp"
#include "shroud/http_backends.hpp"
#include "shroud/prompt.hpp"
#include "shroud/wire.hpp"

#include <httplib.h>

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace shroud;
using namespace shroud::testkit;
using nlohmann::json;

namespace {

struct Family {
    ImageBuffer img = load_image(read_file(fixture("images/family.png")));
    Backends b = mock_backends(MockScenario::load(fixture("scenarios/family.json")));
};

// Local stand-in for a remote model server.
class FakeServer {
public:
    explicit FakeServer(httplib::Server::Handler handler)
    {
        server_.Post(".*", [this, handler](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            last_auth = req.get_header_value("Authorization");
            last_body = req.body;
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer()
    {
        server_.stop();
        thread_.join();
    }
    BackendConfig config(BackendRole role, int retries = 0) const
    {
        BackendConfig c;
        c.role = role;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/run";
        c.timeout_seconds = 5;
        c.retry_count = retries;
        c.model = "test-model";
        return c;
    }

    std::atomic<int> hits{0};
    std::string last_auth;
    std::string last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

void reply_json(httplib::Response& res, const json& j) { res.set_content(j.dump(), "application/json"); }

} // namespace

TEST(MockBackends, DetectorAnswersByContent)
{
    Family f;
    const auto dets = detect_objects(f.b, f.img);
    ASSERT_EQ(dets.size(), 5u);
    EXPECT_EQ(dets[2].label, "face");
    EXPECT_TRUE(detect_objects(f.b, ImageBuffer(8, 8)).empty());
}

TEST(MockBackends, GroundingSortedAndNormalized)
{
    Family f;
    const auto face = ground_phrase(f.b, f.img, "  Baby   FACE ");
    ASSERT_EQ(face.size(), 1u);
    EXPECT_EQ(face[0].box, (BoundingBox{65, 50, 20, 20}));
    const auto people = ground_phrase(f.b, f.img, "person");
    ASSERT_EQ(people.size(), 2u);
    EXPECT_EQ(people[0].box, (BoundingBox{20, 30, 30, 80}));
    EXPECT_GE(people[0].confidence, people[1].confidence);
    EXPECT_TRUE(ground_phrase(f.b, f.img, "unicorn").empty());
    EXPECT_EQ(code_of([&] { ground_phrase(f.b, f.img, "  "); }), Errc::PreconditionViolation);
}

TEST(MockBackends, SegmenterFixtureAndFallback)
{
    Family f;
    const Contour face = segment(f.b, f.img, {65, 50, 20, 20});
    EXPECT_GT(face.outer().size(), 4u);
    const Contour rect = segment(f.b, f.img, {1, 2, 5, 6});
    EXPECT_EQ(rect.outer(), (std::vector<Point>{{1, 2}, {6, 2}, {6, 8}, {1, 8}}));
    EXPECT_EQ(code_of([&] { segment(f.b, f.img, {0, 0, 0, 5}); }), Errc::PreconditionViolation);
    EXPECT_EQ(code_of([&] { segment(f.b, f.img, {150, 0, 20, 5}); }), Errc::PreconditionViolation);
}

TEST(MockBackends, PoseMatchesByOverlap)
{
    Family f;
    EXPECT_EQ(estimate_pose(f.b, f.img, {20, 30, 30, 80}).visible_count(), 17u);
    EXPECT_EQ(estimate_pose(f.b, f.img, {22, 31, 30, 78}).visible_count(), 17u);
    EXPECT_EQ(estimate_pose(f.b, f.img, {110, 30, 30, 80}).visible_count(), 3u);
    EXPECT_EQ(code_of([&] { estimate_pose(f.b, f.img, {0, 0, 10, 10}); }), Errc::NoPersonDetected);
}

TEST(MockBackends, GeneratorRefusesAndRecords)
{
    auto scenario = std::make_shared<MockScenario>(MockScenario::load(fixture("scenarios/family.json")));
    MockBackends m = make_mock_backends(scenario);
    const ImageBuffer img(12, 12);
    RegionMask mask(12, 12);
    mask.set(3, 3);
    EXPECT_EQ(generate_fill(m.backends, img, mask, "a lamp"), MockGenerator::checkerboard(12, 12, "a lamp"));
    EXPECT_EQ(code_of([&] { generate_fill(m.backends, img, mask, "a toy WEAPON"); }), Errc::SafetyRejection);
    EXPECT_EQ(code_of([&] { generate_fill(m.backends, img, RegionMask(12, 12), "x"); }), Errc::PreconditionViolation);
    ASSERT_EQ(m.generator->requests().size(), 2u);
    EXPECT_EQ(m.generator->requests()[0].mask_pixels, 1u);
    EXPECT_NE(MockGenerator::checkerboard(8, 8, "a"), MockGenerator::checkerboard(8, 8, "b"));
}

TEST(MockBackends, ChatCursorRepeatsLast)
{
    MockScenario s;
    const ImageBuffer img(4, 4);
    s.images[image_hash(img)].identification = {"first", "second"};
    auto m = make_mock_backends(std::make_shared<MockScenario>(s));
    PromptBundle b{"hello", {{"original", img}}, ResponseSchema::RiskReportV1};
    EXPECT_EQ(chat_multimodal(m.backends, b), "first");
    EXPECT_EQ(chat_multimodal(m.backends, b), "second");
    EXPECT_EQ(chat_multimodal(m.backends, b), "second");
    b.expected = ResponseSchema::RecommendationSetV1;
    EXPECT_EQ(chat_multimodal(m.backends, b), "[]");
    EXPECT_EQ(m.chat->calls(), 4u);
    b.text.clear();
    EXPECT_EQ(code_of([&] { chat_multimodal(m.backends, b); }), Errc::PreconditionViolation);
}

TEST(MockBackends, ScenarioJsonRoundTrip)
{
    const MockScenario s = MockScenario::load(fixture("scenarios/family.json"));
    EXPECT_EQ(MockScenario::from_json(s.to_json()).to_json(), s.to_json());
    EXPECT_EQ(code_of([] { MockScenario::from_json(json::parse(R"({"images":{"h":{"detections":[1]}}})")); }),
              Errc::InvalidParameter);
}

TEST(Contracts, MissingBackend)
{
    const Backends none;
    const ImageBuffer img(8, 8);
    EXPECT_EQ(code_of([&] { detect_objects(none, img); }), Errc::BackendMissing);
    EXPECT_EQ(code_of([&] { estimate_pose(none, img, {0, 0, 2, 2}); }), Errc::BackendMissing);
}

TEST(Contracts, SegmentClampedToSlack)
{
    class Wild : public SegmenterBackend {
    public:
        Contour segment(const ImageBuffer&, const BoundingBox&) const override
        {
            return Contour({{-50, -50}, {500, -50}, {500, 500}, {-50, 500}});
        }
    };
    Backends b;
    b.segmenter = std::make_shared<Wild>();
    const ImageBuffer img(100, 100);
    const Contour c = segment(b, img, {40, 40, 20, 10});
    for (const auto& p : c.outer()) {
        EXPECT_GE(p.x, 38);
        EXPECT_LE(p.x, 62);
        EXPECT_GE(p.y, 39);
        EXPECT_LE(p.y, 51);
    }
}

TEST(Config, Validation)
{
    BackendConfig c;
    c.endpoint = "ftp://x";
    EXPECT_EQ(code_of([&] { c.validate(); }), Errc::InvalidParameter);
    c.endpoint = "https://x/v1";
    c.retry_count = 4;
    EXPECT_EQ(code_of([&] { c.validate(); }), Errc::InvalidParameter);
    c.retry_count = 3;
    c.validate();
    for (auto r : {BackendRole::Chat, BackendRole::Detector, BackendRole::Grounder, BackendRole::Segmenter,
                   BackendRole::Pose, BackendRole::Generator})
        EXPECT_EQ(parse_role(role_name(r)), r);
}

TEST(Http, ChatRequestAndReply)
{
    FakeServer srv([](const httplib::Request&, httplib::Response& res) {
        reply_json(res, {{"choices", {{{"message", {{"content", "[]"}}}}}}});
    });
    auto cfg = srv.config(BackendRole::Chat);
    cfg.token_env = "SHROUD_TEST_TOKEN";
    setenv("SHROUD_TEST_TOKEN", "sekrit", 1);
    HttpChat chat(cfg);
    const PromptBundle b{"hi", {{"original", ImageBuffer(2, 2)}}, ResponseSchema::RiskReportV1};
    EXPECT_EQ(chat.chat(b), "[]");
    EXPECT_EQ(srv.last_auth, "Bearer sekrit");
    const json sent = json::parse(srv.last_body);
    EXPECT_EQ(sent["model"], "test-model");
    EXPECT_EQ(sent["messages"][0]["content"].size(), 2u);
    unsetenv("SHROUD_TEST_TOKEN");
    EXPECT_EQ(code_of([&] { chat.chat(b); }), Errc::AuthFailure);
}

TEST(Http, RetriesServerErrors)
{
    std::atomic<int> n{0};
    FakeServer srv([&](const httplib::Request&, httplib::Response& res) {
        if (n++ < 2) {
            res.status = 503;
            return;
        }
        reply_json(res, {{"detections", {{{"label", "cup"}, {"box", {1, 1, 2, 2}}, {"confidence", 0.5}}}}});
    });
    EXPECT_EQ(code_of([&] { HttpDetector(srv.config(BackendRole::Detector, 1)).detect(ImageBuffer(4, 4)); }),
              Errc::BackendError);
    EXPECT_EQ(srv.hits.load(), 2);
    const auto d = HttpDetector(srv.config(BackendRole::Detector, 1)).detect(ImageBuffer(4, 4));
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0].label, "cup");
}

TEST(Http, ErrorMapping)
{
    std::string mode;
    FakeServer srv([&](const httplib::Request&, httplib::Response& res) {
        if (mode == "401") res.status = 401;
        else if (mode == "400") res.status = 400;
        else if (mode == "garbage") res.set_content("not json", "text/plain");
        else if (mode == "refused") reply_json(res, {{"refused", true}, {"reason", "nope"}});
        else if (mode == "nobody") reply_json(res, {{"keypoints", nullptr}});
        else reply_json(res, {{"unexpected", 1}});
    });
    const ImageBuffer img(4, 4);
    RegionMask m(4, 4, true);
    HttpGenerator gen(srv.config(BackendRole::Generator));
    HttpPose pose(srv.config(BackendRole::Pose));
    mode = "401";
    EXPECT_EQ(code_of([&] { gen.generate({img, m, "x"}); }), Errc::AuthFailure);
    mode = "400";
    EXPECT_EQ(code_of([&] { gen.generate({img, m, "x"}); }), Errc::BackendError);
    mode = "garbage";
    EXPECT_EQ(code_of([&] { gen.generate({img, m, "x"}); }), Errc::BackendError);
    mode = "refused";
    EXPECT_EQ(code_of([&] { gen.generate({img, m, "x"}); }), Errc::SafetyRejection);
    mode = "shape";
    EXPECT_EQ(code_of([&] { gen.generate({img, m, "x"}); }), Errc::BackendError);
    mode = "nobody";
    EXPECT_EQ(code_of([&] { pose.estimate(img, {0, 0, 2, 2}); }), Errc::NoPersonDetected);
}

TEST(Http, GeneratorAndSegmenterReplies)
{
    const ImageBuffer out(4, 4, kRed);
    FakeServer srv([&](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body);
        if (body.contains("mask_png_base64")) reply_json(res, {{"image_png_base64", wire::image_to_base64_png(out)}});
        else reply_json(res, {{"contour", {{"points", {{0, 0}, {3, 0}, {3, 3}}}}}});
    });
    const ImageBuffer img(4, 4);
    RegionMask m(4, 4, true);
    EXPECT_EQ(HttpGenerator(srv.config(BackendRole::Generator)).generate({img, m, "x"}), out);
    EXPECT_EQ(HttpSegmenter(srv.config(BackendRole::Segmenter)).segment(img, {0, 0, 4, 4}).outer().size(), 3u);
}

TEST(Http, UnreachableIsTransport)
{
    BackendConfig c;
    c.role = BackendRole::Detector;
    c.endpoint = "http://127.0.0.1:1/detect";
    c.timeout_seconds = 2;
    c.retry_count = 0;
    const Errc code = code_of([&] { HttpDetector(c).detect(ImageBuffer(2, 2)); });
    EXPECT_TRUE(code == Errc::Transport || code == Errc::Timeout);
}

TEST(Http, FactoryFillsConfiguredRoles)
{
    BackendConfig c;
    c.role = BackendRole::Pose;
    c.endpoint = "http://127.0.0.1:9/pose";
    const Backends b = make_http_backends({c});
    EXPECT_TRUE(b.pose);
    EXPECT_FALSE(b.chat);
}
