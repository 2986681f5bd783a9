#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "effectsize/effect_model.hpp"
#include "effectsize/errors.hpp"
#include "effectsize/scenario_bench.hpp"

using namespace effectsize;

namespace {

const ScenarioRegistry& registry() {
    static const ScenarioRegistry r = ScenarioRegistry::from_directory(default_scenario_dir());
    return r;
}

json minimal_scenario() {
    return json::parse(R"({
        "name": "tiny",
        "inputs": {"kind": "heuristic", "x": 0.2, "p_null": 0.5},
        "expected": [{"quantity": "heuristic_ate", "value": 0.05, "tolerance": 0, "provenance": "X/4 preset"}]
    })");
}

} // namespace

TEST(ScenarioRegistry, EveryFixturePasses) {
    const auto results = registry().run_all();
    ASSERT_GE(results.size(), 13u);
    for (const auto& r : results) EXPECT_TRUE(r.pass()) << to_table(r);
}

TEST(ScenarioRegistry, NamesAreSortedAndUnique) {
    const auto names = registry().names();
    EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
    EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end());
    EXPECT_NE(std::find(names.begin(), names.end(), "penumbra"), names.end());
}

TEST(ScenarioRegistry, UnknownNameIsNotFound) {
    EXPECT_THROW(registry().find("no-such-scenario"), NotFoundError);
    EXPECT_THROW(ScenarioRegistry::from_directory("/nonexistent/scenarios"), NotFoundError);
}

TEST(ScenarioRegistry, DuplicateNamesRejected) {
    const auto s = scenario_from_json(minimal_scenario());
    EXPECT_THROW(ScenarioRegistry({s, s}), ValidationError);
}

TEST(ScenarioRegistry, PenumbraValue) {
    const auto r = registry().run("penumbra");
    ASSERT_TRUE(r.pass());
    EXPECT_NEAR(*r.quantities.at(0).computed, 0.1, 1e-12);
}

TEST(ScenarioJson, ProvenanceIsRequired) {
    auto j = minimal_scenario();
    EXPECT_NO_THROW(scenario_from_json(j));
    j["expected"][0].erase("provenance");
    EXPECT_THROW(scenario_from_json(j), ValidationError);
    j["expected"][0]["provenance"] = "";
    EXPECT_THROW(scenario_from_json(j), ValidationError);
}

TEST(ScenarioJson, EmptyExpectationsAndUnknownKinds) {
    auto j = minimal_scenario();
    j["expected"] = json::array();
    EXPECT_THROW(scenario_from_json(j), ValidationError);

    j = minimal_scenario();
    j["inputs"]["kind"] = "astrology";
    EXPECT_THROW(run_scenario(scenario_from_json(j)), ValidationError);
}

TEST(ScenarioJson, MissingQuantityFails) {
    auto j = minimal_scenario();
    j["expected"][0]["quantity"] = "not_computed";
    const auto r = run_scenario(scenario_from_json(j));
    EXPECT_FALSE(r.pass());
    EXPECT_FALSE(r.quantities.at(0).computed.has_value());
}

TEST(ScenarioJson, Comparisons) {
    auto j = minimal_scenario();
    j["expected"][0]["comparison"] = "at_least";
    j["expected"][0]["value"] = 0.04;
    EXPECT_TRUE(run_scenario(scenario_from_json(j)).pass());
    j["expected"][0]["comparison"] = "at_most";
    EXPECT_FALSE(run_scenario(scenario_from_json(j)).pass());
    j["expected"][0]["comparison"] = "roughly";
    EXPECT_THROW(scenario_from_json(j), ValidationError);
}

TEST(Retrospective, DecompositionIdentity) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> effect(-2.0, 2.0);
    const auto hyp = with_null_mass(EffectComponent::normal(0.1, 0.1), 0.5);
    for (int i = 0; i < 100; ++i) {
        const double claimed = effect(rng);
        const auto r = retrospective_plausibility(claimed, 0.1, hyp, 0.05, 10'000, 1);
        ASSERT_EQ(r.decomposition.size(), std::size(kNullShareGrid));
        for (const auto& row : r.decomposition) {
            const double back = row.magnitude_needed * (1.0 - row.p_null);
            EXPECT_LE(std::abs(back - claimed), 2.0 * std::numeric_limits<double>::epsilon() * std::abs(claimed))
                << claimed << " at p_null " << row.p_null;
        }
        EXPECT_EQ(r.decomposition.front().magnitude_needed, claimed);
    }
}

TEST(Retrospective, ImpliedPowerFallsToAlphaAsHypothesisShrinks) {
    double previous = 1.0;
    for (double scale : {1.0, 0.1, 0.01, 0.001}) {
        const auto hyp = with_null_mass(EffectComponent::normal(0.2 * scale, 0.05 * scale), 0.5);
        const auto r = retrospective_plausibility(0.42, 0.21, hyp, 0.05, 400'000, 3);
        EXPECT_LE(r.implied_power, previous + 0.002);
        previous = r.implied_power;
    }
    EXPECT_NEAR(previous, 0.05, 0.002);
}

TEST(Retrospective, PointMassAtZeroHasPowerAlpha) {
    const auto r = retrospective_plausibility(0.0, 0.1, EffectDistribution(EffectComponent::point_mass(0.0)),
                                              0.05, 1'000'000, 11);
    EXPECT_NEAR(r.implied_power, 0.05, 0.002);
    EXPECT_NEAR(r.diagnostics.type_s, 0.5, 0.01);
}

TEST(Retrospective, RejectsBadInputs) {
    const auto hyp = with_null_mass(EffectComponent::normal(0.1, 0.1), 0.5);
    EXPECT_THROW(retrospective_plausibility(0.4, 0.0, hyp, 0.05), ValidationError);
    EXPECT_THROW(retrospective_plausibility(NAN, 0.1, hyp, 0.05), ValidationError);
}

TEST(Retrospective, JsonCarriesTableAndRows) {
    const auto r = registry().run("earnings_claim");
    EXPECT_TRUE(r.pass());
    const auto j = to_json(r);
    EXPECT_EQ(j.at("name"), "earnings_claim");
    EXPECT_TRUE(j.at("pass").get<bool>());
    EXPECT_EQ(j.at("quantities").size(), r.quantities.size());
}
