#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "docforge/gdpo.hpp"

using namespace docforge;
using rewards::RewardVector;

static RewardVector rv(double t, double f, double tb, double s) {
    RewardVector v;
    v.text = t;
    v.formula = f;
    v.table = tb;
    v.structure = s;
    return v;
}

TEST_CASE("group stats use the population form") {
    const gdpo::GroupStats s = gdpo::group_stats({1.0, 3.0});
    REQUIRE(s.mean == 2.0);
    REQUIRE(s.stddev == 1.0);  // sqrt(((1)^2 + (1)^2)/2)

    const gdpo::GroupStats one = gdpo::group_stats({5.0});
    REQUIRE(one.mean == 5.0);
    REQUIRE(one.stddev == 0.0);
}

TEST_CASE("group normalize centers and unit-scales") {
    const EngineConfig c;
    const std::vector<double> normed = gdpo::group_normalize({1.0, 3.0}, c.epsilon);
    REQUIRE(normed[0] == Catch::Approx(-1.0).epsilon(1e-5));
    REQUIRE(normed[1] == Catch::Approx(1.0).epsilon(1e-5));

    // constant column: zero signal, never a division blowup
    const std::vector<double> flat = gdpo::group_normalize({0.4, 0.4, 0.4}, c.epsilon);
    for (const double x : flat) REQUIRE(x == 0.0);
}

TEST_CASE("equal weighted sums collapse the scalar baseline but not the dimensional path") {
    const EngineConfig c;  // weights 1.0, 0.8, 0.8, 0.5
    // both rollouts sum to 0.5 exactly: 1.0*0.25 + 0.5*0.5 and 1.0*0.5
    const std::vector<RewardVector> group{rv(0.25, 0.0, 0.0, 0.5), rv(0.5, 0.0, 0.0, 0.0)};

    const gdpo::ScalarAdvantages scalar = gdpo::summed_advantages(group, c);
    REQUIRE(scalar.summed[0] == 0.5);
    REQUIRE(scalar.summed[1] == 0.5);
    REQUIRE(gdpo::spread(scalar.advantages) < 1e-12);

    const gdpo::DimensionAdvantages dim = gdpo::dimension_advantages(group, c);
    REQUIRE(gdpo::spread(dim.advantages) > 0.1);
    // text favors the second rollout, structure the first
    REQUIRE(dim.normalized[0][0] < 0.0);
    REQUIRE(dim.normalized[1][0] > 0.0);
    REQUIRE(dim.normalized[0][3] > 0.0);
    REQUIRE(dim.normalized[1][3] < 0.0);
    // batch rescale pins the two-rollout case to roughly +/-1
    REQUIRE(dim.advantages[0] == Catch::Approx(-1.0).epsilon(1e-4));
    REQUIRE(dim.advantages[1] == Catch::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("dimension advantages preserve ordering within each dimension") {
    const EngineConfig c;
    const std::vector<RewardVector> group{rv(0.9, 0.2, 0.5, 1.0), rv(0.1, 0.8, 0.5, 0.0),
                                          rv(0.5, 0.5, 0.5, 0.5)};
    const gdpo::DimensionAdvantages dim = gdpo::dimension_advantages(group, c);
    // text: 0.9 > 0.5 > 0.1
    REQUIRE(dim.normalized[0][0] > dim.normalized[2][0]);
    REQUIRE(dim.normalized[2][0] > dim.normalized[1][0]);
    // table column is constant: all zeros
    for (size_t i = 0; i < 3; ++i) REQUIRE(dim.normalized[i][2] == 0.0);
}

TEST_CASE("degenerate groups behave") {
    const EngineConfig c;
    REQUIRE(gdpo::dimension_advantages({}, c).advantages.empty());
    const gdpo::DimensionAdvantages solo = gdpo::dimension_advantages({rv(1, 1, 1, 1)}, c);
    REQUIRE(solo.advantages.size() == 1);
    REQUIRE(solo.advantages[0] == 0.0);
}

TEST_CASE("normalized dimension statistics are centered and near unit scale") {
    // with a tiny epsilon the normalized column has mean 0 and stddev ~= 1
    EngineConfig c;
    c.epsilon = 1e-12;
    const std::vector<double> xs{0.1, 0.35, 0.62, 0.97, 0.4};
    const std::vector<double> normed = gdpo::group_normalize(xs, c.epsilon);
    const gdpo::GroupStats s = gdpo::group_stats(normed);
    REQUIRE(std::abs(s.mean) < 1e-9);
    REQUIRE(std::abs(s.stddev - 1.0) < 1e-9);
}
