#include "testkit.hpp"

#include "shroud/codec.hpp"
#include "shroud/error.hpp"
#include "shroud/eval.hpp"
#include "shroud/hash.hpp"
#include "shroud/obfuscation.hpp"
#include "shroud/prompt.hpp"
#include "shroud/risk_model.hpp"
#include "shroud/service.hpp"
#include "shroud/wire.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#ifndef SHROUD_FIXTURE_DIR
#error "SHROUD_FIXTURE_DIR must be defined"
#endif

namespace shroud::testkit {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

RegionMask unite(const RegionMask& a, const RegionMask& b)
{
    RegionMask out = a;
    for (size_t i = 0; i < out.bits().size(); ++i) out.bits()[i] = a.bits()[i] | b.bits()[i];
    return out;
}

RegionMask box_mask(const BoundingBox& box, uint32_t w, uint32_t h)
{
    RegionMask m(w, h);
    for (int32_t y = std::max(0, box.y); y < std::min<int32_t>(int32_t(h), box.bottom()); ++y)
        for (int32_t x = std::max(0, box.x); x < std::min<int32_t>(int32_t(w), box.right()); ++x)
            m.set(uint32_t(x), uint32_t(y));
    return m;
}

// Every pixel whose center lies within `r` of a visible keypoint, or within
// one pixel of a skeleton segment between rounded endpoints.
RegionMask figure_bound(const PoseKeypoints& pose, double r, uint32_t w, uint32_t h)
{
    RegionMask m(w, h);
    for (uint32_t y = 0; y < h; ++y)
        for (uint32_t x = 0; x < w; ++x) {
            bool hit = false;
            for (const auto& k : pose.points) {
                const double dx = x + 0.5 - k.x, dy = y + 0.5 - k.y;
                if (k.visible && dx * dx + dy * dy <= r * r) hit = true;
            }
            for (const auto& [a, b] : kSkeletonPairs) {
                const auto& p = pose.points[size_t(a)];
                const auto& q = pose.points[size_t(b)];
                if (!p.visible || !q.visible || hit) continue;
                const double px = std::lround(p.x), py = std::lround(p.y);
                const double qx = std::lround(q.x), qy = std::lround(q.y);
                const double vx = qx - px, vy = qy - py, len2 = vx * vx + vy * vy;
                double t = len2 > 0 ? ((x - px) * vx + (y - py) * vy) / len2 : 0;
                t = std::clamp(t, 0.0, 1.0);
                const double ex = px + t * vx - x, ey = py + t * vy - y;
                if (ex * ex + ey * ey <= 1.0) hit = true;
            }
            if (hit) m.set(x, y);
        }
    return m;
}

std::string render_bundle(const PromptBundle& b)
{
    std::string out = "schema: " + std::string(schema_name(b.expected)) + "\n";
    for (size_t i = 0; i < b.images.size(); ++i)
        out += "image " + std::to_string(i + 1) + " " + b.images[i].role + " " + image_hash(b.images[i].image) + "\n";
    return out + "\n" + b.text;
}

} // namespace

std::string fixture(const std::string& rel) { return std::string(SHROUD_FIXTURE_DIR) + "/" + rel; }

bool update_goldens()
{
    const char* v = std::getenv("SHROUD_UPDATE_GOLDENS");
    return v && *v && std::string(v) != "0";
}

ImageBuffer random_image(Rng& rng, uint32_t w, uint32_t h)
{
    ImageBuffer img(w, h);
    for (auto& b : img.data()) b = uint8_t(rng());
    return img;
}

RegionMask random_mask(Rng& rng, uint32_t w, uint32_t h)
{
    RegionMask m(w, h);
    const int shapes = uniform(rng, 1, 3);
    for (int s = 0; s < shapes; ++s) {
        const int x0 = uniform(rng, 0, int(w) - 1), y0 = uniform(rng, 0, int(h) - 1);
        const int x1 = uniform(rng, x0, int(w) - 1), y1 = uniform(rng, y0, int(h) - 1);
        const bool ellipse = rng() & 1;
        const double cx = (x0 + x1 + 1) / 2.0, cy = (y0 + y1 + 1) / 2.0;
        const double rx = (x1 - x0 + 1) / 2.0, ry = (y1 - y0 + 1) / 2.0;
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
                if (!ellipse || dx * dx + dy * dy <= 1.0) m.set(uint32_t(x), uint32_t(y));
            }
    }
    if (m.empty()) m.set(uint32_t(uniform(rng, 0, int(w) - 1)), uint32_t(uniform(rng, 0, int(h) - 1)));
    return m;
}

std::vector<Point> random_simple_polygon(Rng& rng, uint32_t w, uint32_t h, size_t n, Point* center, double* rmin)
{
    const double cx = uniform_real(rng, 0, w), cy = uniform_real(rng, 0, h);
    const double rmax = uniform_real(rng, 2, std::max(w, h) * 0.75);
    if (center) *center = {cx, cy};
    if (rmin) *rmin = INFINITY;
    std::vector<Point> pts;
    for (size_t k = 0; k < n; ++k) {
        const double step = 2 * std::numbers::pi / double(n);
        const double a = step * (double(k) + uniform_real(rng, 0, 0.8));
        const double r = uniform_real(rng, 0.3, 1.0) * rmax;
        if (rmin) *rmin = std::min(*rmin, r);
        pts.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    return pts;
}

PoseKeypoints random_pose(Rng& rng, uint32_t w, uint32_t h, size_t visible)
{
    PoseKeypoints pose;
    for (size_t i = 0; i < pose.points.size(); ++i)
        pose.points[i] = {uniform_real(rng, 0, w - 0.01), uniform_real(rng, 0, h - 0.01), i < visible};
    std::shuffle(pose.points.begin(), pose.points.end(), rng);
    return pose;
}

RegionMask brute_rasterize(const Contour& c, uint32_t w, uint32_t h)
{
    std::vector<const std::vector<Point>*> rings{&c.outer()};
    for (const auto& hole : c.holes()) rings.push_back(&hole);
    RegionMask m(w, h);
    for (uint32_t y = 0; y < h; ++y)
        for (uint32_t x = 0; x < w; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            bool inside = false;
            for (const auto* ring : rings) {
                const auto& v = *ring;
                for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++)
                    if (((v[i].y > py) != (v[j].y > py)) &&
                        (px < (v[j].x - v[i].x) * (py - v[i].y) / (v[j].y - v[i].y) + v[i].x))
                        inside = !inside;
            }
            if (inside) m.set(x, y);
        }
    return m;
}

RegionMask brute_dilate(const RegionMask& m, uint32_t r)
{
    const int64_t w = m.width(), h = m.height(), rr = r;
    RegionMask out(m.width(), m.height());
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            for (int64_t v = y - rr; v <= y + rr && !out.at(uint32_t(x), uint32_t(y)); ++v)
                for (int64_t u = x - rr; u <= x + rr; ++u)
                    if (u >= 0 && v >= 0 && u < w && v < h && m.at(uint32_t(u), uint32_t(v))) {
                        out.set(uint32_t(x), uint32_t(y));
                        break;
                    }
    return out;
}

BoundingBox brute_bbox(const RegionMask& m)
{
    int32_t x0 = INT32_MAX, y0 = INT32_MAX, x1 = -1, y1 = -1;
    for (uint32_t y = 0; y < m.height(); ++y)
        for (uint32_t x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                x0 = std::min<int32_t>(x0, int32_t(x));
                y0 = std::min<int32_t>(y0, int32_t(y));
                x1 = std::max<int32_t>(x1, int32_t(x));
                y1 = std::max<int32_t>(y1, int32_t(y));
            }
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

std::vector<double> reference_blur(const ImageBuffer& img, double sigma)
{
    const int r = int(std::ceil(3 * sigma));
    std::vector<double> k(size_t(2 * r + 1));
    double sum = 0;
    for (int i = -r; i <= r; ++i) sum += k[size_t(i + r)] = std::exp(-double(i * i) / (2 * sigma * sigma));
    for (auto& v : k) v /= sum;

    const int w = int(img.width()), h = int(img.height());
    std::vector<double> tmp(size_t(w) * h * 4), out(tmp.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 4; ++c) {
                double acc = 0;
                for (int i = -r; i <= r; ++i)
                    acc += k[size_t(i + r)] * img.data()[(size_t(y) * w + size_t(std::clamp(x + i, 0, w - 1))) * 4 + size_t(c)];
                tmp[(size_t(y) * w + size_t(x)) * 4 + size_t(c)] = acc;
            }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 4; ++c) {
                double acc = 0;
                for (int i = -r; i <= r; ++i)
                    acc += k[size_t(i + r)] * tmp[(size_t(std::clamp(y + i, 0, h - 1)) * w + size_t(x)) * 4 + size_t(c)];
                out[(size_t(y) * w + size_t(x)) * 4 + size_t(c)] = acc;
            }
    return out;
}

size_t violations(const ImageBuffer& a, const ImageBuffer& b, const RegionMask& allowed)
{
    size_t n = 0;
    for (uint32_t y = 0; y < a.height(); ++y)
        for (uint32_t x = 0; x < a.width(); ++x)
            if (!allowed.at(x, y) && !(a.at(x, y) == b.at(x, y))) ++n;
    return n;
}

Backends mock_backends(const MockScenario& scenario)
{
    return make_mock_backends(std::make_shared<const MockScenario>(scenario)).backends;
}

SuiteResult locality_suite(size_t pairs, uint64_t seed)
{
    const auto t0 = Clock::now();
    Rng rng(seed);
    const Backends backends = mock_backends();
    size_t bad = 0, runs = 0;
    std::string first;
    for (Technique t : kAllTechniques) {
        for (size_t i = 0; i < pairs; ++i) {
            const uint32_t w = uint32_t(uniform(rng, 4, 48)), h = uint32_t(uniform(rng, 4, 48));
            const ImageBuffer img = random_image(rng, w, h);
            const RegionMask mask = random_mask(rng, w, h);
            RegionMask allowed = mask;
            ImageBuffer out(1, 1);
            switch (t) {
            case Technique::Blurring: out = apply_blur(img, mask, uniform_real(rng, 0.3, 8)); break;
            case Technique::Pixelating: out = apply_pixelate(img, mask, uint32_t(uniform(rng, 1, 16))); break;
            case Technique::Silhouette: out = apply_silhouette(img, mask, {uint8_t(rng()), 0, 0, 255}); break;
            case Technique::Masking:
                out = apply_mask_fill(img, mask, kBlack);
                allowed = box_mask(brute_bbox(mask), w, h);
                break;
            case Technique::BarReplacement: {
                const BarParams p{kBlack, uniform_real(rng, 0.05, 1.0)};
                out = apply_bar(img, mask, p, backends);
                allowed = unite(brute_dilate(mask, kGenerativeDilation),
                                box_mask(bar_rect(brute_bbox(mask), p.height_fraction), w, h));
                break;
            }
            case Technique::DotRepresentation: {
                const PoseKeypoints pose = random_pose(rng, w, h, size_t(uniform(rng, 5, 17)));
                const DotParams p{uniform_real(rng, 0.5, 4), bool(rng() & 1)};
                out = apply_point_light(img, mask, pose, p, backends);
                allowed = unite(brute_dilate(mask, kGenerativeDilation), figure_bound(pose, p.dot_radius, w, h));
                break;
            }
            case Technique::Removal:
                out = apply_removal(img, mask, backends);
                allowed = brute_dilate(mask, kGenerativeDilation);
                break;
            case Technique::AvatarReplacement:
                out = apply_avatar(img, mask, {}, backends);
                allowed = brute_dilate(mask, kGenerativeDilation);
                break;
            case Technique::GenerativeReplacement:
                out = apply_generative_replacement(img, mask, {"prompt " + std::to_string(i), std::nullopt}, backends);
                allowed = brute_dilate(mask, kGenerativeDilation);
                break;
            }
            ++runs;
            if (const size_t v = violations(img, out, allowed)) {
                ++bad;
                if (first.empty())
                    first = std::string(technique_name(t)) + " case " + std::to_string(i) + ": " + std::to_string(v) +
                            " pixels changed outside the allowed region";
            }
        }
    }
    SuiteResult r;
    r.seconds = since(t0);
    r.pass = bad == 0 && r.seconds < 60;
    r.detail = std::to_string(runs) + " cases, " + std::to_string(bad) + " violations" +
               (first.empty() ? "" : " (" + first + ")");
    return r;
}

SuiteResult pixelation_oracle(size_t cases, uint64_t seed)
{
    const auto t0 = Clock::now();
    Rng rng(seed);
    size_t bad = 0;
    std::string first;
    for (size_t i = 0; i < cases; ++i) {
        const uint32_t w = uint32_t(uniform(rng, 1, 64)), h = uint32_t(uniform(rng, 1, 64));
        const uint32_t block = uint32_t(uniform(rng, 1, 20));
        const ImageBuffer img = random_image(rng, w, h);
        const RegionMask mask = random_mask(rng, w, h);
        const ImageBuffer out = apply_pixelate(img, mask, block);
        const BoundingBox bb = brute_bbox(mask);

        size_t v = violations(img, out, mask);
        for (uint32_t gy = uint32_t(bb.y); gy < uint32_t(bb.bottom()); gy += block)
            for (uint32_t gx = uint32_t(bb.x); gx < uint32_t(bb.right()); gx += block) {
                double sum[4] = {0, 0, 0, 0};
                size_t n = 0;
                for (uint32_t y = gy; y < std::min(gy + block, h); ++y)
                    for (uint32_t x = gx; x < std::min(gx + block, w); ++x)
                        if (mask.at(x, y)) {
                            const Rgba p = img.at(x, y);
                            sum[0] += p.r, sum[1] += p.g, sum[2] += p.b, sum[3] += p.a;
                            ++n;
                        }
                if (n == 0) continue;
                for (uint32_t y = gy; y < std::min(gy + block, h); ++y)
                    for (uint32_t x = gx; x < std::min(gx + block, w); ++x)
                        if (mask.at(x, y)) {
                            const Rgba p = out.at(x, y);
                            const double got[4] = {double(p.r), double(p.g), double(p.b), double(p.a)};
                            for (int c = 0; c < 4; ++c)
                                if (std::abs(got[c] - sum[c] / double(n)) > 1.0) ++v;
                        }
            }
        if (v) {
            ++bad;
            if (first.empty()) first = "case " + std::to_string(i) + " block " + std::to_string(block);
        }
    }
    SuiteResult r;
    r.seconds = since(t0);
    r.pass = bad == 0;
    r.detail = std::to_string(cases) + " cases, " + std::to_string(bad) + " violations" +
               (first.empty() ? "" : " (" + first + ")");
    return r;
}

SuiteResult blur_oracle()
{
    const auto t0 = Clock::now();
    std::string detail;
    bool pass = true;
    for (double sigma : {1.0, 2.0, 4.0, 8.0}) {
        const uint32_t r = uint32_t(std::ceil(3 * sigma));
        const uint32_t side = 2 * r + 9;
        ImageBuffer img(side, side, kBlack);
        img.set(side / 2, side / 2, kWhite);
        const ImageBuffer out = apply_blur(img, RegionMask(side, side, true), sigma);
        const std::vector<double> ref = reference_blur(img, sigma);
        double worst = 0;
        for (size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(double(out.data()[i]) - ref[i]));
        pass = pass && worst <= 1.0;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%ssigma %g max err %.3f", detail.empty() ? "" : ", ", sigma, worst);
        detail += buf;
    }
    return {pass, detail, since(t0)};
}

SuiteResult rasterization_oracle(size_t polygons, uint64_t seed)
{
    const auto t0 = Clock::now();
    Rng rng(seed);
    size_t bad = 0, with_holes = 0;
    std::string first;
    for (size_t i = 0; i < polygons; ++i) {
        const uint32_t w = uint32_t(uniform(rng, 8, 64)), h = uint32_t(uniform(rng, 8, 64));
        const size_t n = size_t(uniform(rng, 3, 24));
        Point center;
        double rmin = 0;
        std::vector<Point> outer = random_simple_polygon(rng, w, h, n, &center, &rmin);
        std::vector<std::vector<Point>> holes;
        if (n >= 6 && (rng() & 1)) {
            // Angular gaps stay below 0.6 pi, so the outer ring keeps 0.58 rmin clear around the center.
            std::vector<Point> hole;
            const double a0 = uniform_real(rng, 0, 2 * std::numbers::pi), hr = 0.4 * rmin;
            for (int k = 0; k < 3; ++k)
                hole.push_back({center.x + hr * std::cos(a0 + k * 2 * std::numbers::pi / 3),
                                center.y + hr * std::sin(a0 + k * 2 * std::numbers::pi / 3)});
            holes.push_back(std::move(hole));
        }
        Contour c(outer, holes);
        const RegionMask got = rasterize_contour(c, w, h);
        const RegionMask want = brute_rasterize(c, w, h);
        if (!(got == want)) {
            ++bad;
            if (first.empty()) first = "polygon " + std::to_string(i) + " with " + std::to_string(n) + " points";
        }
        with_holes += holes.empty() ? 0 : 1;
    }
    SuiteResult r;
    r.seconds = since(t0);
    r.pass = bad == 0;
    r.detail = std::to_string(polygons) + " polygons (" + std::to_string(with_holes) + " with holes), " +
               std::to_string(bad) + " mismatches" +
               (first.empty() ? "" : " (" + first + ")");
    return r;
}

SuiteResult schema_suite()
{
    const auto t0 = Clock::now();
    const std::string dir = fixture("schema/");
    const json manifest = json::parse(read_text(dir + "manifest.json"));
    size_t ok = 0;
    std::string failures;
    for (const auto& c : manifest) {
        const std::string name = c.at("name");
        const std::string expect = c.at("expect");
        std::string got = "ok", why;
        try {
            RiskReport report = parse_risk_report(read_text(dir + c.at("report").get<std::string>()));
            const std::string s1 = serialize_report(report);
            if (serialize_report(parse_risk_report(s1)) != s1) why = "identification round trip differs";
            if (c.contains("risks") && report.risks.size() != c["risks"].get<size_t>()) why = "risk count";
            if (c.contains("elements") && report.elements.size() != c["elements"].get<size_t>()) why = "element count";
            if (c.contains("marked"))
                for (int64_t id : c["marked"].get<std::vector<int64_t>>())
                    if (!report.elements.count(id) || !report.elements.at(id).marked_by_user) why = "marked flag";
            if (c.contains("recommendations")) {
                const AnnotatedRiskReport a = merge_recommendations(
                    report, parse_recommendations(read_text(dir + c["recommendations"].get<std::string>())));
                const std::string s2 = serialize_annotated(a);
                if (serialize_annotated(parse_annotated(s2)) != s2) why = "annotated round trip differs";
                if (c.contains("recs")) {
                    std::vector<size_t> counts;
                    for (const auto& r : a.risks) counts.push_back(r.recommendations.size());
                    if (counts != c["recs"].get<std::vector<size_t>>()) why = "recommendation counts";
                }
                if (c.contains("warnings") && a.warnings.size() != c["warnings"].get<size_t>())
                    why = "warning count " + std::to_string(a.warnings.size());
            }
        } catch (const Error& e) {
            got = std::string(errc_name(e.code()));
        }
        if (got != expect) why = "expected " + expect + ", got " + got;
        if (why.empty())
            ++ok;
        else
            failures += (failures.empty() ? "" : "; ") + name + ": " + why;
    }
    SuiteResult r;
    r.seconds = since(t0);
    r.pass = ok == manifest.size() && manifest.size() == 20;
    r.detail = std::to_string(ok) + "/" + std::to_string(manifest.size()) + " fixtures" +
               (failures.empty() ? "" : " (" + failures + ")");
    return r;
}

SuiteResult prompt_goldens()
{
    const auto t0 = Clock::now();
    const ImageBuffer img = load_image(read_file(fixture("images/family.png")));
    const MockScenario scenario = MockScenario::load(fixture("scenarios/family.json"));
    const Backends backends = mock_backends(scenario);
    const PreScan scan = build_prescan(img, detect_objects(backends, img));
    RiskReport report = parse_risk_report(scenario.images.at(image_hash(img)).identification.front());
    escalate_marked(report);

    UserContext empty;
    UserContext text{"share it with my parents in a group chat", "I do not want to show my baby's face", std::nullopt};
    UserContext marked = text;
    {
        std::vector<Point> ring;
        for (int k = 0; k < 24; ++k)
            ring.push_back({75 + 13 * std::cos(k * std::numbers::pi / 12), 60 + 13 * std::sin(k * std::numbers::pi / 12)});
        marked.concern_mask = rasterize_contour(Contour(ring), img.width(), img.height());
    }

    const std::vector<std::pair<std::string, const UserContext*>> contexts = {
        {"empty", &empty}, {"text", &text}, {"marked", &marked}};
    size_t matched = 0, total = 0;
    std::string failures;
    for (const auto& [name, ctx] : contexts) {
        const std::pair<std::string, PromptBundle> bundles[] = {
            {"identification", build_identification_prompt(*ctx, scan, img)},
            {"recommendation", build_recommendation_prompt(*ctx, report, img)}};
        for (const auto& [kind, bundle] : bundles) {
            ++total;
            const std::string path = fixture("goldens/prompts/" + name + "_" + kind + ".txt");
            const std::string rendered = render_bundle(bundle);
            if (update_goldens()) {
                std::filesystem::create_directories(std::filesystem::path(path).parent_path());
                write_file(path, rendered);
            }
            if (std::filesystem::exists(path) && read_text(path) == rendered)
                ++matched;
            else
                failures += (failures.empty() ? "" : ", ") + name + "_" + kind;
        }
    }
    SuiteResult r;
    r.seconds = since(t0);
    r.pass = matched == total && total == 6;
    r.detail = std::to_string(matched) + "/" + std::to_string(total) + " bundles byte-match" +
               (failures.empty() ? "" : " (differ: " + failures + ")");
    return r;
}

SuiteResult eval_closure()
{
    const auto t0 = Clock::now();
    std::string detail;
    bool pass = true;

    const auto synthetic = load_dataset(fixture("eval/synthetic.jsonl"));
    const EvalMetrics m = run_eval(synthetic, mock_backends(oracle_scenario(synthetic)));
    auto one = [](const std::optional<double>& v) { return v && *v == 1.0; };
    const bool closure = synthetic.size() == 25 && m.failed_cases == 0 && one(m.binary_task.accuracy) &&
                         one(m.binary_task.precision) && one(m.binary_task.recall) && one(m.category_task.accuracy) &&
                         one(m.category_task.precision) && one(m.category_task.recall) && one(m.severity_task.accuracy);
    pass = pass && closure;
    detail += "oracle on " + std::to_string(synthetic.size()) + " cases: " + (closure ? "all 1.0" : "NOT all 1.0") +
              " (severity precision/recall are '-' by table layout)";

    const auto planted = load_dataset(fixture("eval/planted.jsonl"));
    const EvalMetrics p = run_eval(planted, mock_backends(MockScenario::load(fixture("eval/planted_scenario.json"))));
    const bool counts = p.binary.tp == 3 && p.binary.tn == 4 && p.binary.fp == 2 && p.binary.fn == 1;
    const bool rates = p.binary_task.accuracy == 0.7 && p.binary_task.precision == 0.6 && p.binary_task.recall == 0.75;
    pass = pass && counts && rates && p.failed_cases == 0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "; planted TP=%zu TN=%zu FP=%zu FN=%zu -> %.4g/%.4g/%.4g", p.binary.tp, p.binary.tn,
                  p.binary.fp, p.binary.fn, p.binary_task.accuracy.value_or(-1), p.binary_task.precision.value_or(-1),
                  p.binary_task.recall.value_or(-1));
    detail += buf;

    SuiteResult r;
    r.seconds = since(t0);
    r.pass = pass && r.seconds < 30;
    r.detail = detail;
    return r;
}

namespace {

struct E2EFailure {
    std::string what;
};

void expect(bool cond, const std::string& what)
{
    if (!cond) throw E2EFailure{what};
}

json checked_json(const httplib::Result& res, int status, const std::string& step)
{
    expect(bool(res), step + ": no response");
    expect(res->status == status, step + ": status " + std::to_string(res->status) + " body " + res->body);
    return json::parse(res->body);
}

} // namespace

SuiteResult service_e2e()
{
    const auto t0 = Clock::now();
    SuiteResult r;
    const MockScenario scenario = MockScenario::load(fixture("scenarios/family.json"));
    ServiceConfig cfg;
    Service service(cfg, mock_backends(scenario));
    const int port = service.bind("127.0.0.1", 0);
    if (port <= 0) return {false, "could not bind a local port", since(t0)};
    std::thread server([&] { service.listen(); });
    service.wait_until_ready();

    try {
        httplib::Client cli("127.0.0.1", port);
        cli.set_read_timeout(30, 0);
        checked_json(cli.Get("/v1/healthz"), 200, "healthz");

        const std::string id = checked_json(cli.Post("/v1/sessions"), 201, "create").at("id");
        const std::string base = "/v1/sessions/" + id;
        const auto upload_bytes = read_file(fixture("images/family.png"));
        const ImageBuffer upload = load_image(upload_bytes);
        checked_json(cli.Post(base + "/image", std::string(upload_bytes.begin(), upload_bytes.end()), "image/png"), 200,
                     "upload");
        checked_json(cli.Put(base + "/context",
                             json{{"intent", "share with family"}, {"concern", "my baby's face"}}.dump(),
                             "application/json"),
                     200, "context");

        const json report = checked_json(cli.Post(base + "/analyze"), 200, "analyze");
        expect(report.is_array() && report.size() == 3, "analyze: expected 3 risks");
        expect(report[0].at("severity") == "High", "analyze: marked risk not escalated");

        const json located = checked_json(cli.Post(base + "/locate"), 200, "locate").at("selections");
        std::map<int64_t, Contour> first_instance;
        for (const auto& sel : located)
            if (!sel.at("instances").empty())
                first_instance.emplace(sel.at("element_id").get<int64_t>(),
                                       wire::contour_from_flat_json(sel.at("instances")[0].at("contour")));
        expect(first_instance.count(1) && first_instance.count(2), "locate: face and plate not located");

        const json classical = checked_json(
            cli.Post(base + "/apply",
                     json{{"risk_id", 2}, {"element_id", 2}, {"technique", "Pixelating"}, {"params", {{"block", 3}}}}.dump(),
                     "application/json"),
            200, "apply classical");
        const json generative =
            checked_json(cli.Post(base + "/apply",
                                  json{{"risk_id", 1}, {"element_id", 1}, {"technique", "Generative Replacement"}}.dump(),
                                  "application/json"),
                         200, "apply generative");
        expect(generative.at("edit").at("params").at("prompt") == "a plush teddy bear face, soft daylight",
               "apply generative: recommended prompt not used");
        expect(generative.at("history_length") == 2, "apply: history length");

        const json undone = checked_json(cli.Post(base + "/undo"), 200, "undo");
        expect(undone.at("history_length") == 1 && undone.at("image_hash") == classical.at("edit").at("post_hash"),
               "undo: image is not the classical post-image");
        const json redone = checked_json(cli.Post(base + "/redo"), 200, "redo");
        expect(redone.at("history_length") == 2 && redone.at("image_hash") == generative.at("edit").at("post_hash"),
               "redo: image is not the generative post-image");

        const auto ex = cli.Get(base + "/export");
        expect(ex && ex->status == 200, "export: status");
        const std::string ct = ex->get_header_value("Content-Type");
        const auto bpos = ct.find("boundary=");
        expect(bpos != std::string::npos, "export: no boundary");
        const auto parts = parse_multipart(ex->body, ct.substr(bpos + 9));
        expect(parts.size() == 2 && parts[0].content_type == "image/png" && parts[1].content_type == "application/json",
               "export: expected png + json parts");
        const ImageBuffer exported =
            load_image(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(parts[0].body.data()), parts[0].body.size()));
        const json sidecar = json::parse(parts[1].body);
        expect(sidecar.at("edits").size() == 2, "export: sidecar does not list 2 edits");

        const RegionMask plate = rasterize_contour(first_instance.at(2), upload.width(), upload.height());
        const RegionMask face = rasterize_contour(first_instance.at(1), upload.width(), upload.height());
        const RegionMask allowed = unite(plate, brute_dilate(face, kGenerativeDilation));
        const size_t v = violations(upload, exported, allowed);
        expect(v == 0, "locality: " + std::to_string(v) + " pixels changed outside the edited regions");
        expect(violations(upload, exported, RegionMask(upload.width(), upload.height())) > 0, "export: nothing changed");

        const auto current = cli.Get(base + "/image/current");
        expect(current && current->status == 200 &&
                   image_hash(load_image(std::span<const uint8_t>(
                       reinterpret_cast<const uint8_t*>(current->body.data()), current->body.size()))) ==
                       image_hash(exported),
               "image/current differs from export");
        r.pass = true;
        r.detail = "upload, context, analyze, locate, 2 applies, undo, redo, export; 0 locality violations";
    } catch (const E2EFailure& f) {
        r.detail = f.what;
    } catch (const std::exception& e) {
        r.detail = std::string("exception: ") + e.what();
    }
    service.stop();
    server.join();
    r.seconds = since(t0);
    if (r.pass && r.seconds >= 30) {
        r.pass = false;
        r.detail += "; too slow";
    }
    return r;
}

} // namespace shroud::testkit
