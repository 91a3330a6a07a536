#include "expect.hpp"
#include "testkit.hpp"

#include "shroud/eval.hpp"

#include <gtest/gtest.h>

using namespace shroud;
using namespace shroud::testkit;

namespace {

EvalMetrics planted()
{
    const auto data = load_dataset(fixture("eval/planted.jsonl"));
    return run_eval(data, mock_backends(MockScenario::load(fixture("eval/planted_scenario.json"))));
}

} // namespace

TEST(Eval, ClosureSuite)
{
    const SuiteResult r = eval_closure();
    EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Eval, PlantedCountsByHand)
{
    const EvalMetrics m = planted();
    EXPECT_EQ(m.cases, 3u);
    EXPECT_EQ(m.failed_cases, 0u);
    EXPECT_EQ(m.binary, (BinaryCounts{3, 2, 4, 1}));
    EXPECT_DOUBLE_EQ(*m.binary_task.accuracy, 0.7);
    EXPECT_DOUBLE_EQ(*m.binary_task.precision, 0.6);
    EXPECT_DOUBLE_EQ(*m.binary_task.recall, 0.75);
    EXPECT_EQ(m.category_task.total, 4u);
    EXPECT_DOUBLE_EQ(*m.category_task.accuracy, 0.75);
    EXPECT_EQ(m.category_confusion[5][2], 1u);
    EXPECT_DOUBLE_EQ(*m.severity_task.accuracy, 1.0);
    EXPECT_FALSE(m.severity_task.precision);
    EXPECT_FALSE(m.severity_task.recall);
}

TEST(Eval, ParallelMatchesSerial)
{
    const auto data = load_dataset(fixture("eval/synthetic.jsonl"));
    const Backends b = mock_backends(oracle_scenario(data));
    EvalOptions par;
    par.jobs = 4;
    EXPECT_EQ(metrics_to_json(run_eval(data, b)), metrics_to_json(run_eval(data, b, par)));
}

TEST(Matching, Similarity)
{
    EXPECT_DOUBLE_EQ(label_similarity("human face", "face"), 0.5);
    EXPECT_DOUBLE_EQ(label_similarity("car", "license plate"), 0.0);
    EXPECT_DOUBLE_EQ(label_similarity("License-Plate", "license plate"), 1.0);
    EXPECT_DOUBLE_EQ(label_similarity("", ""), 0.0);
}

TEST(Matching, GreedyOneToOne)
{
    const Matching m = match_elements({"face", "human face", "dog"}, {"face", "passport"});
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_EQ(m.pairs[0].predicted, 0u);
    EXPECT_EQ(m.pairs[0].gold, 0u);
    EXPECT_EQ(m.unmatched_predicted, (std::vector<size_t>{1, 2}));
    EXPECT_EQ(m.unmatched_gold, (std::vector<size_t>{1}));
}

TEST(Severity, LikertMapping)
{
    EXPECT_EQ(map_severity(1), Severity::Low);
    EXPECT_EQ(map_severity(2), Severity::Low);
    EXPECT_EQ(map_severity(3), Severity::Medium);
    EXPECT_EQ(map_severity(5), Severity::Medium);
    EXPECT_EQ(map_severity(6), Severity::High);
    EXPECT_EQ(map_severity(7), Severity::High);
    EXPECT_EQ(map_severity(3, SeverityMap::parse("3,4")), Severity::Low);
    EXPECT_EQ(code_of([] { map_severity(0); }), Errc::OutOfRange);
    EXPECT_EQ(code_of([] { map_severity(8); }), Errc::OutOfRange);
    EXPECT_EQ(code_of([] { SeverityMap::parse("5,2"); }), Errc::InvalidParameter);
    EXPECT_EQ(code_of([] { SeverityMap::parse("x"); }), Errc::InvalidParameter);
    EXPECT_EQ(SeverityMap::parse("1,6").to_string(), "1,6");
}

TEST(Category, DatasetIndexAndOracleLabels)
{
    EXPECT_EQ(category_index(CategoryKind::IdentityExposure), 0);
    EXPECT_EQ(category_index(CategoryKind::LocationExposure), 1);
    EXPECT_EQ(category_index(CategoryKind::SelfDisclosure), 2);
    EXPECT_EQ(category_index(CategoryKind::Bystander), 3);
    EXPECT_EQ(category_index(CategoryKind::ConfidentialInformationLeakage), 4);
    EXPECT_EQ(category_index(CategoryKind::Other), 5);
    for (int c = 0; c < kCategoryCount; ++c)
        EXPECT_EQ(category_index(classify_category(oracle_risk_label(c)).kind), c) << c;
}

TEST(Dataset, LoadErrors)
{
    const auto line = [](const std::string& obj) {
        return R"({"id":"x","image":"nope.png","objects":[)" + obj + "]}";
    };
    EXPECT_EQ(code_of([&] {
                  parse_dataset(line(R"({"label":"a","sensitive":true,"category":0,"severity":9})"), "", false);
              }),
              Errc::ParseError);
    EXPECT_EQ(code_of([&] {
                  parse_dataset(line(R"({"label":"a","sensitive":"yes","category":0,"severity":1})"), "", false);
              }),
              Errc::ParseError);
    EXPECT_EQ(code_of([&] { parse_dataset("{not json", "", false); }), Errc::ParseError);
    EXPECT_EQ(code_of([&] { parse_dataset(line(""), "/definitely/missing", true); }), Errc::MissingImage);
    EXPECT_EQ(code_of([] { load_dataset("/definitely/missing.jsonl"); }), Errc::ParseError);
    EXPECT_TRUE(parse_dataset("\n\n", "", true).empty());
    try {
        parse_dataset("\n" + line(R"({"label":"a","sensitive":true,"category":7,"severity":1})"), "", false);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(e.detail().find("line 2"), std::string::npos);
    }
}

TEST(Report, JsonRoundTripAndText)
{
    const EvalMetrics m = planted();
    const EvalMetrics back = metrics_from_json(metrics_to_json(m));
    EXPECT_EQ(metrics_to_json(back), metrics_to_json(m));
    const std::string text = report_metrics(m, ReportFormat::Text);
    EXPECT_NE(text.find("70.00"), std::string::npos);
    EXPECT_NE(text.find("60.00"), std::string::npos);
    EXPECT_NE(text.find("75.00"), std::string::npos);
    const auto sev = text.find("Severity(High/Med/Low)");
    ASSERT_NE(sev, std::string::npos);
    const std::string row = text.substr(sev, text.find('\n', sev) - sev);
    EXPECT_NE(row.find("100.00"), std::string::npos);
    EXPECT_NE(row.find(" -"), std::string::npos);
    EXPECT_EQ(nlohmann::json::parse(report_metrics(m, ReportFormat::Json)), nlohmann::json(metrics_to_json(m)));
}

TEST(Report, EmptyDatasetGivesNulls)
{
    const EvalMetrics m = run_eval({}, mock_backends());
    EXPECT_EQ(m.cases, 0u);
    EXPECT_FALSE(m.binary_task.accuracy);
    EXPECT_FALSE(m.category_task.accuracy);
    const auto j = metrics_to_json(m);
    EXPECT_TRUE(j.dump().find("null") != std::string::npos);
}

TEST(Report, FailedCaseIsCountedNotFatal)
{
    auto data = load_dataset(fixture("eval/planted.jsonl"));
    MockScenario sc = MockScenario::load(fixture("eval/planted_scenario.json"));
    for (auto& [h, f] : sc.images) f.identification = {"not json at all"};
    const EvalMetrics m = run_eval(data, mock_backends(sc));
    EXPECT_EQ(m.failed_cases, 3u);
    EXPECT_EQ(m.errors.size(), 3u);
}
