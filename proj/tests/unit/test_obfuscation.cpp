#include "expect.hpp"
#include "testkit.hpp"

#include "shroud/codec.hpp"
#include "shroud/hash.hpp"
#include "shroud/obfuscation.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace shroud;
using namespace shroud::testkit;

namespace {

RegionMask box_mask(uint32_t w, uint32_t h, const BoundingBox& b)
{
    RegionMask m(w, h);
    for (int32_t y = b.y; y < b.bottom(); ++y)
        for (int32_t x = b.x; x < b.right(); ++x) m.set(uint32_t(x), uint32_t(y));
    return m;
}

PoseKeypoints grid_pose(uint32_t x0, uint32_t y0)
{
    PoseKeypoints p;
    for (size_t i = 0; i < 17; ++i) p.points[i] = {double(x0 + (i % 4) * 9) + 0.5, double(y0 + (i / 4) * 9) + 0.5, true};
    return p;
}

} // namespace

TEST(Blur, SuiteOracle)
{
    const SuiteResult r = blur_oracle();
    EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Blur, UniformColorIsFixedPoint)
{
    const ImageBuffer img(21, 13, Rgba{77, 140, 3, 200});
    for (double s : {0.5, 1.0, 3.0, 12.0}) EXPECT_EQ(apply_blur(img, RegionMask(21, 13, true), s), img);
}

TEST(Blur, EmptyMaskAndBadSigma)
{
    Rng rng(51);
    const ImageBuffer img = random_image(rng, 10, 10);
    EXPECT_EQ(apply_blur(img, RegionMask(10, 10), 4), img);
    EXPECT_EQ(code_of([&] { apply_blur(img, RegionMask(10, 10, true), 0); }), Errc::InvalidParameter);
    EXPECT_EQ(code_of([&] { apply_blur(img, RegionMask(3, 3), 1); }), Errc::DimensionMismatch);
}

TEST(Blur, WeightsSumExactly)
{
    for (double s : {0.3, 1.0, 2.7, 8.0, 40.0}) {
        const auto w = gaussian_weights(s);
        EXPECT_EQ(w.size(), size_t(2 * std::ceil(3 * s) + 1));
        int64_t total = 0;
        for (auto v : w) total += v;
        EXPECT_EQ(total, 1 << 14);
        EXPECT_EQ(w.front(), w.back());
    }
}

TEST(Pixelate, SuiteOracle)
{
    const SuiteResult r = pixelation_oracle(40, 7);
    EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Pixelate, TwoToneCells)
{
    ImageBuffer img(4, 4);
    for (uint32_t y = 0; y < 4; ++y)
        for (uint32_t x = 0; x < 4; ++x) img.set(x, y, (x + y) % 2 ? Rgba{200, 200, 200, 255} : Rgba{0, 0, 0, 255});
    const ImageBuffer out = apply_pixelate(img, RegionMask(4, 4, true), 2);
    for (uint32_t y = 0; y < 4; ++y)
        for (uint32_t x = 0; x < 4; ++x) EXPECT_EQ(out.at(x, y), (Rgba{100, 100, 100, 255}));
    EXPECT_EQ(apply_pixelate(img, RegionMask(4, 4, true), 1), img);
    EXPECT_EQ(code_of([&] { apply_pixelate(img, RegionMask(4, 4), 2); }), Errc::EmptyMask);
    EXPECT_EQ(code_of([&] { apply_pixelate(img, RegionMask(4, 4, true), 0); }), Errc::InvalidParameter);
}

TEST(MaskFill, PaintsWholeBoundingBox)
{
    Rng rng(52);
    const ImageBuffer img = random_image(rng, 20, 20);
    RegionMask l(20, 20);
    for (uint32_t y = 4; y < 14; ++y) l.set(5, y);
    for (uint32_t x = 5; x < 12; ++x) l.set(x, 13);
    const ImageBuffer out = apply_mask_fill(img, l, kRed);
    const RegionMask box = box_mask(20, 20, {5, 4, 7, 10});
    for (uint32_t y = 0; y < 20; ++y)
        for (uint32_t x = 0; x < 20; ++x) EXPECT_EQ(out.at(x, y), box.at(x, y) ? kRed : img.at(x, y));
}

TEST(Silhouette, ChangesExactlyTheMask)
{
    Rng rng(53);
    const ImageBuffer img = random_image(rng, 25, 18);
    const RegionMask m = random_mask(rng, 25, 18);
    const Rgba c{40, 40, 40, 255};
    const ImageBuffer out = apply_silhouette(img, m, c);
    for (uint32_t y = 0; y < 18; ++y)
        for (uint32_t x = 0; x < 25; ++x) EXPECT_EQ(out.at(x, y), m.at(x, y) ? c : img.at(x, y));
}

TEST(Bar, RectGeometry)
{
    EXPECT_EQ(bar_rect({3, 10, 10, 30}), (BoundingBox{3, 11, 10, 9}));
    EXPECT_EQ(bar_rect({0, 0, 5, 1}), (BoundingBox{0, 0, 5, 1}));
    EXPECT_EQ(bar_rect({0, 0, 5, 10}, 1.0), (BoundingBox{0, 0, 5, 10}));
}

TEST(Bar, DrawsBarOverRemoval)
{
    const Backends b = mock_backends();
    const ImageBuffer img(40, 50, Rgba{90, 120, 150, 255});
    const RegionMask m = box_mask(40, 50, {12, 6, 10, 30});
    const ImageBuffer out = apply_bar(img, m, BarParams{}, b);
    const ImageBuffer removal = apply_removal(img, m, b);
    for (uint32_t y = 0; y < 50; ++y)
        for (uint32_t x = 0; x < 40; ++x) {
            const bool bar = x >= 12 && x < 22 && y >= 7 && y < 16;
            EXPECT_EQ(out.at(x, y), bar ? kBlack : removal.at(x, y)) << x << "," << y;
        }
    EXPECT_EQ(removal, composite(img, MockGenerator::checkerboard(40, 50, kRemovalPrompt), dilate_mask(m, 2)));
}

TEST(PointLight, DotsAtKeypoints)
{
    const Backends b = mock_backends();
    const ImageBuffer img(60, 60, Rgba{30, 60, 90, 255});
    const RegionMask m = box_mask(60, 60, {8, 8, 40, 48});
    const PoseKeypoints pose = grid_pose(10, 10);
    DotParams p;
    p.draw_skeleton_lines = false;
    p.dot_radius = 2;
    const ImageBuffer out = apply_point_light(img, m, pose, p, b);
    const ImageBuffer base = apply_removal(img, m, b);
    for (uint32_t y = 0; y < 60; ++y)
        for (uint32_t x = 0; x < 60; ++x) {
            bool dot = false;
            for (const auto& k : pose.points) dot = dot || std::hypot(x + 0.5 - k.x, y + 0.5 - k.y) <= 2;
            EXPECT_EQ(out.at(x, y), dot ? kWhite : base.at(x, y)) << x << "," << y;
        }
}

TEST(PointLight, SkeletonAddsLinesOnly)
{
    const Backends b = mock_backends();
    const ImageBuffer img(60, 60, Rgba{30, 60, 90, 255});
    const RegionMask m = box_mask(60, 60, {8, 8, 40, 48});
    DotParams off;
    off.draw_skeleton_lines = false;
    const ImageBuffer without = apply_point_light(img, m, grid_pose(10, 10), off, b);
    const ImageBuffer with = apply_point_light(img, m, grid_pose(10, 10), DotParams{}, b);
    size_t extra = 0;
    for (uint32_t y = 0; y < 60; ++y)
        for (uint32_t x = 0; x < 60; ++x)
            if (with.at(x, y) != without.at(x, y)) {
                EXPECT_EQ(with.at(x, y), kWhite);
                ++extra;
            }
    EXPECT_GT(extra, 0u);
}

TEST(PointLight, TooFewKeypoints)
{
    const Backends b = mock_backends();
    const ImageBuffer img(30, 30);
    PoseKeypoints pose = grid_pose(1, 1);
    for (size_t i = 3; i < 17; ++i) pose.points[i].visible = false;
    EXPECT_EQ(code_of([&] { apply_point_light(img, RegionMask(30, 30, true), pose, {}, b); }),
              Errc::InsufficientKeypoints);
    PoseKeypoints off = grid_pose(100, 100);
    EXPECT_EQ(code_of([&] { apply_point_light(img, RegionMask(30, 30, true), off, {}, b); }),
              Errc::InsufficientKeypoints);
}

TEST(Generative, PromptDrivesFillAndStaysLocal)
{
    const Backends b = mock_backends();
    Rng rng(54);
    const ImageBuffer img = random_image(rng, 30, 30);
    const RegionMask m = box_mask(30, 30, {10, 10, 6, 6});
    const ImageBuffer a = apply_generative_replacement(img, m, {"a red ball", {}}, b);
    const ImageBuffer c = apply_generative_replacement(img, m, {"a blue kite", {}}, b);
    EXPECT_NE(a, c);
    EXPECT_EQ(violations(img, a, dilate_mask(m, kGenerativeDilation)), 0u);
    EXPECT_EQ(code_of([&] { apply_generative_replacement(img, m, {"   ", {}}, b); }), Errc::EmptyPrompt);
    EXPECT_EQ(code_of([&] { apply_generative_replacement(img, RegionMask(30, 30), {"x", {}}, b); }), Errc::EmptyMask);
}

TEST(Generative, AvatarUsesStylePromptAndReference)
{
    auto m = make_mock_backends(std::make_shared<MockScenario>());
    const ImageBuffer img(20, 20), ref(4, 4, kRed);
    AvatarParams p;
    p.reference = ref;
    apply_avatar(img, box_mask(20, 20, {5, 5, 3, 3}), p, m.backends);
    ASSERT_EQ(m.generator->requests().size(), 1u);
    EXPECT_EQ(m.generator->requests()[0].prompt, p.style_prompt);
    EXPECT_EQ(m.generator->requests()[0].reference_hash, image_hash(ref));
    EXPECT_EQ(m.generator->requests()[0].mask_pixels, 49u);
}

TEST(Dispatch, AllTechniquesRun)
{
    const Backends b = mock_backends(MockScenario::load(fixture("scenarios/family.json")));
    const ImageBuffer img = load_image(read_file(fixture("images/family.png")));
    const Contour person({{20, 30}, {50, 30}, {50, 110}, {20, 110}});
    for (Technique t : kAllTechniques) {
        TechniqueParams p = default_params(t);
        if (auto* g = std::get_if<GenerativeParams>(&p)) g->prompt = "a tree";
        const ImageBuffer out = apply(t, img, person, p, b);
        EXPECT_NE(out, img) << technique_name(t);
        EXPECT_EQ(technique_of(p), t);
    }
    EXPECT_EQ(code_of([&] { apply(Technique::Blurring, img, person, PixelateParams{}, b); }), Errc::InvalidParameter);
    EXPECT_EQ(code_of([&] { apply(Technique::Blurring, img, RegionMask(3, 3), BlurParams{}, b); }),
              Errc::DimensionMismatch);
}

TEST(Dispatch, DotsNeedPoseBackend)
{
    Backends b = mock_backends();
    b.pose = nullptr;
    const ImageBuffer img(20, 20);
    EXPECT_EQ(code_of([&] { apply(Technique::DotRepresentation, img, RegionMask(20, 20, true), DotParams{}, b); }),
              Errc::BackendMissing);
}

TEST(Params, JsonRoundTripAndValidation)
{
    for (Technique t : kAllTechniques) {
        if (t == Technique::Removal) continue;
        const TechniqueParams d = default_params(t);
        auto j = nlohmann::json::parse(params_to_json(d).dump());
        j.erase("reference_hash");
        EXPECT_EQ(params_to_json(params_from_json(t, j)), params_to_json(d)) << technique_name(t);
    }
    EXPECT_EQ(std::get<PixelateParams>(params_from_json(Technique::Pixelating, {{"block", 3}})).block, 3u);
    EXPECT_EQ(code_of([] { params_from_json(Technique::Pixelating, {{"block", 2.5}}); }), Errc::InvalidParameter);
    EXPECT_EQ(code_of([] { params_from_json(Technique::Blurring, {{"radius", 2}}); }), Errc::InvalidParameter);
    EXPECT_EQ(code_of([] { validate(BlurParams{-1}); }), Errc::InvalidParameter);
    EXPECT_EQ(code_of([] { validate(BarParams{kBlack, 1.5}); }), Errc::InvalidParameter);
    EXPECT_EQ(code_of([] { validate(AvatarParams{" ", {}}); }), Errc::EmptyPrompt);
    EXPECT_EQ(parse_color("#ff000080"), (Rgba{255, 0, 0, 128}));
    EXPECT_EQ(parse_color({1, 2, 3}), (Rgba{1, 2, 3, 255}));
    EXPECT_EQ(code_of([] { parse_color("red"); }), Errc::InvalidParameter);
    EXPECT_EQ(code_of([] { parse_color({1, 2, 300}); }), Errc::InvalidParameter);
}

TEST(Locality, SmallSuite)
{
    const SuiteResult r = locality_suite(20, 99);
    EXPECT_TRUE(r.pass) << r.detail;
}
