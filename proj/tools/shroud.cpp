#include "shroud/codec.hpp"
#include "shroud/config.hpp"
#include "shroud/error.hpp"
#include "shroud/eval.hpp"
#include "shroud/hash.hpp"
#include "shroud/mock_backends.hpp"
#include "shroud/obfuscation.hpp"
#include "shroud/service.hpp"
#include "shroud/session.hpp"
#include "shroud/version.hpp"
#include "shroud/wire.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <pthread.h>
#include <thread>

using namespace shroud;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInternal = 1, kValidation = 2, kBackend = 3, kParse = 4, kCaseErrors = 5 };

int exit_code(Errc code)
{
    switch (code) {
    case Errc::Transport:
    case Errc::AuthFailure:
    case Errc::Timeout:
    case Errc::BackendError:
    case Errc::SafetyRejection:
    case Errc::DegenerateResult:
    case Errc::NoPersonDetected:
    case Errc::BackendMissing:
    case Errc::InsufficientKeypoints: return kBackend;
    case Errc::NotJson:
    case Errc::SchemaViolation:
    case Errc::DuplicateElementConflict:
    case Errc::UnknownTechnique:
    case Errc::UnknownRiskId:
    case Errc::UnknownElementId:
    case Errc::CoverageGap: return kParse;
    case Errc::EncodeFailure:
    case Errc::IntegrityFailure: return kInternal;
    default: return kValidation;
    }
}

struct Common {
    std::string config_path;
    std::string backend;
    std::string scenario;
    bool verbose = false;
};

ServiceConfig load_config(const Common& c)
{
    ServiceConfig cfg = c.config_path.empty() ? ServiceConfig{} : ServiceConfig::load(c.config_path);
    if (!c.backend.empty()) {
        const auto mode = parse_backend_mode(c.backend);
        if (!mode) fail(Errc::InvalidParameter, "backend must be none, mock, or live");
        cfg.backend = *mode;
    }
    if (!c.scenario.empty()) cfg.mock_scenario = c.scenario;
    return cfg;
}

ImageBuffer read_image(const std::string& path) { return load_image(read_file(path)); }

ImageFormat format_for(const std::string& path)
{
    std::string ext = std::filesystem::path(path).extension().string();
    for (auto& ch : ext) ch = char(std::tolower(static_cast<unsigned char>(ch)));
    if (ext == ".jpg" || ext == ".jpeg") return ImageFormat::Jpeg;
    if (ext == ".png") return ImageFormat::Png;
    fail(Errc::InvalidParameter, "output must end in .png, .jpg, or .jpeg");
}

std::string join(const std::vector<std::string>& v, const char* sep)
{
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
    return out;
}

void print_summary(std::FILE* to, const AnnotatedRiskReport& report)
{
    if (report.empty()) {
        std::fprintf(to, "No privacy risks identified.\n");
        return;
    }
    std::fprintf(to, "%-4s %-8s %-40s %-28s %s\n", "ID", "Severity", "Risk", "Threat actors", "Elements");
    for (const auto& a : report.risks) {
        std::vector<std::string> els;
        for (const auto& e : a.risk.elements) {
            const auto it = report.elements.find(e.id);
            std::string name = it == report.elements.end() ? std::to_string(e.id) : it->second.element;
            if (e.marked_by_user) name += " (marked)";
            els.push_back(name);
        }
        std::fprintf(to, "%-4lld %-8s %-40s %-28s %s\n", static_cast<long long>(a.risk.privacy_risk_id),
                     std::string(severity_name(a.risk.severity)).c_str(), a.risk.label.c_str(),
                     join(a.risk.threat_actors, ", ").c_str(), join(els, ", ").c_str());
    }
    for (const auto& w : report.warnings) std::fprintf(to, "warning: %s\n", w.c_str());
}

struct AnalyzeArgs {
    std::string image, intent, concern, concern_mask, out;
    bool has_intent = false, has_concern = false;
};

int cmd_analyze(const Common& common, const AnalyzeArgs& a)
{
    ServiceConfig cfg = load_config(common);
    if (cfg.backend == BackendMode::None) fail(Errc::InvalidParameter, "analyze needs --backend mock or live");
    const ImageBuffer img = read_image(a.image);
    UserContext ctx;
    if (a.has_intent) ctx.sharing_intent = a.intent;
    if (a.has_concern) ctx.privacy_concern = a.concern;
    if (!a.concern_mask.empty()) {
        RegionMask m = decode_mask_png(read_file(a.concern_mask));
        require_same_size(img, m);
        ctx.concern_mask = std::move(m);
    }
    const Backends backends = make_backends(cfg);
    const AnnotatedRiskReport report = run_analysis(backends, img, ctx).report;
    const std::string text = serialize_annotated(report);
    if (a.out.empty()) {
        std::cout << text << "\n";
        print_summary(stderr, report);
    } else {
        write_file(a.out, text);
        print_summary(stdout, report);
    }
    return kOk;
}

struct ApplyArgs {
    std::string image, mask, contour, technique, out, color, prompt, style_prompt, reference;
    double sigma = 0, dot_radius = 0, bar_height = 0;
    int block = 0;
    bool no_skeleton = false;
};

int cmd_apply(const Common& common, const ApplyArgs& a, CLI::App& app)
{
    const auto technique = parse_technique(a.technique);
    if (!technique) fail(Errc::InvalidParameter, "unknown technique \"" + a.technique + "\"");

    json params = json::object();
    auto given = [&](const char* flag) { return app.count(flag) > 0; };
    if (given("--sigma")) params["sigma"] = a.sigma;
    if (given("--block")) params["block"] = a.block;
    if (given("--color")) params["color"] = a.color;
    if (given("--prompt")) params["prompt"] = a.prompt;
    if (given("--style-prompt")) params["style_prompt"] = a.style_prompt;
    if (given("--dot-radius")) params["dot_radius"] = a.dot_radius;
    if (given("--no-skeleton")) params["draw_skeleton_lines"] = false;
    if (given("--bar-height")) params["height_fraction"] = a.bar_height;
    if (given("--reference")) {
        const auto bytes = read_file(a.reference);
        params["reference"] = base64_encode(bytes);
    }
    const TechniqueParams tp = params_from_json(*technique, params);
    const ImageFormat out_format = format_for(a.out);

    const ImageBuffer img = read_image(a.image);
    Selection sel = RegionMask(1, 1);
    if (!a.mask.empty()) {
        sel = decode_mask_png(read_file(a.mask));
    } else {
        const auto bytes = read_file(a.contour);
        json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
        if (j.is_discarded()) fail(Errc::InvalidParameter, a.contour + " is not JSON");
        const json& pts = j.at("points");
        sel = (!pts.empty() && pts[0].is_number()) ? wire::contour_from_flat_json(j) : wire::contour_from_json(j);
    }

    ServiceConfig cfg = load_config(common);
    if (common.backend.empty() && common.config_path.empty()) cfg.backend = BackendMode::None;
    const Backends backends = make_backends(cfg);
    const ImageBuffer out = apply(*technique, img, sel, tp, backends);
    write_file(a.out, save_image(out, out_format));
    return kOk;
}

struct EvalArgs {
    std::string dataset, backend = "oracle", severity_map = "2,5", out, format = "text";
    double threshold = 0.5;
    unsigned jobs = 1;
};

int cmd_eval(Common common, const EvalArgs& a)
{
    const SeverityMap map = SeverityMap::parse(a.severity_map);
    if (!(a.threshold > 0 && a.threshold <= 1)) fail(Errc::InvalidParameter, "--match-threshold must be in (0, 1]");
    if (a.format != "text" && a.format != "json") fail(Errc::InvalidParameter, "--format must be text or json");
    if (a.backend != "oracle" && a.backend != "mock" && a.backend != "live")
        fail(Errc::InvalidParameter, "--backend must be mock, oracle, or live");
    const auto dataset = load_dataset(a.dataset);

    Backends backends;
    if (a.backend == "oracle") {
        backends = make_mock_backends(std::make_shared<MockScenario>(oracle_scenario(dataset, map))).backends;
    } else {
        common.backend = a.backend;
        backends = make_backends(load_config(common));
    }
    const EvalMetrics m = run_eval(dataset, backends, {map, a.threshold, std::max(1u, a.jobs)});
    std::cout << report_metrics(m, a.format == "json" ? ReportFormat::Json : ReportFormat::Text);
    if (!a.out.empty()) write_file(a.out, report_metrics(m, ReportFormat::Json));
    for (const auto& e : m.errors) std::fprintf(stderr, "case failed: %s\n", e.c_str());
    return m.failed_cases ? kCaseErrors : kOk;
}

struct ServeArgs {
    std::string host;
    int port = -1;
};

int cmd_serve(const Common& common, const ServeArgs& a)
{
    ServiceConfig cfg = load_config(common);
    if (!a.host.empty()) cfg.host = a.host;
    if (a.port >= 0) cfg.port = a.port;
    if (cfg.port < 0 || cfg.port > 65535) fail(Errc::InvalidParameter, "port out of range");
    Service svc(cfg, make_backends(cfg));
    if (common.verbose) svc.set_request_log([](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); });

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGTERM);
    sigaddset(&set, SIGINT);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    const int port = svc.bind(cfg.host, cfg.port);
    if (port < 0) {
        std::fprintf(stderr, "error: cannot bind %s:%d\n", cfg.host.c_str(), cfg.port);
        return kInternal;
    }
    std::printf("listening on %s:%d\n", cfg.host.c_str(), port);
    std::fflush(stdout);

    std::atomic<bool> signalled{false};
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        signalled = true;
        svc.stop();
    });
    const bool ok = svc.listen();
    if (!signalled) pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return ok || signalled ? kOk : kInternal;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Privacy risk analysis and obfuscation for images."};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.set_help_all_flag("--help-all", "Print help for every subcommand and exit");
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "Configuration file (JSON) shared with the service");
    app.add_flag("-v,--verbose", common.verbose, "Log requests and extra diagnostics to stderr");

    AnalyzeArgs aa;
    auto* analyze = app.add_subcommand("analyze", "Identify privacy risks and recommend obfuscations");
    analyze->add_option("--image", aa.image, "Input image (PNG or JPEG)")->required();
    analyze->add_option("--intent", aa.intent, "Sharing intent text");
    analyze->add_option("--concern", aa.concern, "Privacy concern text");
    analyze->add_option("--concern-mask", aa.concern_mask, "Concern region as a 1-bit PNG mask");
    analyze->add_option("--out", aa.out, "Write the annotated report JSON here (default: stdout)");
    analyze->add_option("--backend", common.backend, "Backend mode: mock or live (default mock)");
    analyze->add_option("--scenario", common.scenario, "Mock scenario file for --backend mock");

    ApplyArgs pa;
    auto* applyc = app.add_subcommand("apply", "Apply one obfuscation technique to a selection");
    applyc->add_option("--image", pa.image, "Input image (PNG or JPEG)")->required();
    auto* mask_opt = applyc->add_option("--mask", pa.mask, "Selection as a 1-bit PNG mask");
    auto* contour_opt = applyc->add_option("--contour", pa.contour, "Selection as contour JSON {\"points\", \"holes\"}");
    mask_opt->excludes(contour_opt);
    applyc->add_option("--technique", pa.technique,
                       "blur, pixelate, mask, silhouette, bar, dots, removal, avatar, or generative")
        ->required();
    applyc->add_option("--sigma", pa.sigma, "Blur sigma in pixels (default 8)");
    applyc->add_option("--block", pa.block, "Pixelation block size in pixels (default 12)");
    applyc->add_option("--color", pa.color, "Fill color #rrggbb or #rrggbbaa (mask, silhouette, bar)");
    applyc->add_option("--prompt", pa.prompt, "Generation prompt (generative)");
    applyc->add_option("--style-prompt", pa.style_prompt, "Avatar style prompt (avatar)");
    applyc->add_option("--reference", pa.reference, "Reference image for avatar or generative");
    applyc->add_option("--dot-radius", pa.dot_radius, "Dot radius in pixels (dots, default 4)");
    applyc->add_flag("--no-skeleton", pa.no_skeleton, "Omit skeleton lines (dots)");
    applyc->add_option("--bar-height", pa.bar_height, "Bar height as a fraction of the box height (bar, default 0.3)");
    applyc->add_option("--out", pa.out, "Output image (.png, .jpg, .jpeg)")->required();
    applyc->add_option("--backend", common.backend, "Backend mode: none, mock, or live (default none)");
    applyc->add_option("--scenario", common.scenario, "Mock scenario file for --backend mock");

    EvalArgs ea;
    auto* evalc = app.add_subcommand("eval", "Evaluate risk identification on a JSONL dataset");
    evalc->add_option("--dataset", ea.dataset, "Dataset JSONL file")->required();
    evalc->add_option("--backend", ea.backend, "Backend mode: oracle, mock, or live (default oracle)");
    evalc->add_option("--scenario", common.scenario, "Mock scenario file for --backend mock");
    evalc->add_option("--severity-map", ea.severity_map, "Likert cut points low_max,medium_max (default 2,5)");
    evalc->add_option("--match-threshold", ea.threshold, "Minimum label Jaccard similarity (default 0.5)");
    evalc->add_option("--jobs", ea.jobs, "Cases evaluated in parallel (default 1)");
    evalc->add_option("--out", ea.out, "Write metrics JSON here");
    evalc->add_option("--format", ea.format, "Console output: text or json (default text)");

    ServeArgs sa;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--host", sa.host, "Listen address (default from config, else 127.0.0.1)");
    serve->add_option("--port", sa.port, "Listen port; 0 picks a free one (default from config, else 8080)");
    serve->add_option("--backend", common.backend, "Backend mode: none, mock, or live");
    serve->add_option("--scenario", common.scenario, "Mock scenario file for --backend mock");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }

    try {
        if (*analyze) {
            aa.has_intent = analyze->count("--intent") > 0;
            aa.has_concern = analyze->count("--concern") > 0;
            return cmd_analyze(common, aa);
        }
        if (*applyc) {
            if (pa.mask.empty() && pa.contour.empty()) fail(Errc::InvalidParameter, "give --mask or --contour");
            return cmd_apply(common, pa, *applyc);
        }
        if (*evalc) return cmd_eval(common, ea);
        if (*serve) return cmd_serve(common, sa);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInternal;
    }
    return kOk;
}
