#include "doctest.h"

#include <cmath>
#include <map>
#include <numeric>

#include "oracles.hpp"
#include "qchaos/error.hpp"
#include "qchaos/partitions.hpp"

using namespace qchaos;
using namespace qchaos::partitions;
using maps::GridPartition;
using maps::MapSpec;
using qmath::EntropicIndex;

namespace {

RefineOptions small(int n_max, std::size_t samples = 200'000, std::uint64_t seed = 7) {
  RefineOptions o;
  o.n_max = n_max;
  o.samples = samples;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("partition entropy of equal cells") {
  for (int m : {2, 3, 4, 16}) {
    auto p = qmath::ProbabilityVector(std::vector<double>(static_cast<std::size_t>(m), 1.0 / m));
    CHECK(partition_entropy(p, EntropicIndex(1.0)) == doctest::Approx(std::log(m)).epsilon(1e-14));
    CHECK(partition_entropy(p, EntropicIndex(0.5)) ==
          doctest::Approx(qmath::q_log(m, EntropicIndex(0.5))).epsilon(1e-14));
  }
}

TEST_CASE("step zero atoms are the partition cells") {
  for (auto map : {MapSpec::doubling(), MapSpec::baker(), MapSpec::cat(), MapSpec::rotation(1, 2)}) {
    auto part = GridPartition::generating_for(map);
    auto atoms = refine(map, part, small(0));
    REQUIRE(atoms.atom_count(0) == static_cast<std::size_t>(part.cell_count()));
    auto mu = atoms.measures(0);
    for (std::size_t i = 0; i < mu.size(); ++i)
      CHECK(std::abs(mu[i] - 1.0 / part.cell_count()) <= atoms.tolerance());
  }
}

TEST_CASE("doubling atoms match the dyadic enumeration") {
  auto map = MapSpec::doubling();
  auto atoms = refine(map, GridPartition::generating_for(map), small(3, 400'000));
  auto exact = oracle::doubling_atoms(3);
  REQUIRE(atoms.atom_count(3) == exact.size());
  REQUIRE(exact.size() == 16);
  double n = static_cast<double>(atoms.samples());
  for (const auto& a : atoms.atoms(3)) {
    REQUIRE(exact.count(a.itinerary) == 1);
    double mu = exact.at(a.itinerary);
    double sd = std::sqrt(mu * (1 - mu) / n);
    CHECK(std::abs(static_cast<double>(a.count) / n - mu) <= 5 * sd);
  }
  // itinerary decoding: key k at step 3 is the binary expansion of k
  auto labels = atoms.itinerary(3, 0b1011);
  CHECK(labels == std::vector<int>{1, 0, 1, 1});
}

TEST_CASE("rotation by a quarter turn has four equal atoms") {
  auto map = MapSpec::rotation(1, 2);
  auto atoms = refine(map, GridPartition::generating_for(map), small(6));
  for (int n = 0; n <= 6; ++n) {
    REQUIRE(atoms.atom_count(n) == 4);
    auto mu = atoms.measures(n);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(mu[i] - 0.25) <= atoms.tolerance());
  }
}

TEST_CASE("KS slope oracles") {
  RefineOptions o;  // n_max 12, 1e6 samples
  o.seed = 11;
  SUBCASE("doubling matches the dyadic entropy oracle") {
    auto map = MapSpec::doubling();
    auto est = ks_entropy_estimate(map, GridPartition::generating_for(map), EntropicIndex(1.0), o,
                                   default_window(o.n_max));
    std::vector<double> exact;
    for (int n = 0; n <= o.n_max; ++n) exact.push_back(oracle::doubling_entropy(n));
    double oracle_slope = oracle::slope(exact, est.window.first, est.window.last);
    CHECK(oracle_slope == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(est.slope - oracle_slope) <= 0.05 * oracle_slope);
  }
  SUBCASE("baker matches the lattice oracle") {
    auto map = MapSpec::baker();
    auto est = ks_entropy_estimate(map, GridPartition::generating_for(map), EntropicIndex(1.0), o,
                                   default_window(o.n_max));
    auto lattice = oracle::baker_lattice_entropies(12, o.n_max);
    double oracle_slope = oracle::slope(lattice, est.window.first, est.window.last);
    CHECK(oracle_slope == doctest::Approx(std::log(2.0)).epsilon(1e-3));
    CHECK(std::abs(est.slope - oracle_slope) <= 0.05 * oracle_slope);
    for (int n = 0; n <= 6; ++n)
      CHECK(std::abs(est.entropies[static_cast<std::size_t>(n)] - lattice[static_cast<std::size_t>(n)]) <
            0.01);
  }
  SUBCASE("rational rotations generate no entropy") {
    for (auto [p, q] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 5}, std::pair{3, 4}}) {
      auto map = MapSpec::rotation(p, q);
      auto est = ks_entropy_estimate(map, GridPartition::generating_for(map), EntropicIndex(1.0),
                                     o, default_window(o.n_max));
      CAPTURE(p);
      CAPTURE(q);
      CHECK(std::abs(est.slope) <= 2 * est.slope_stderr + 1e-12);
    }
  }
}

TEST_CASE("rescaled entropy check") {
  RefineOptions o;
  o.seed = 3;
  SUBCASE("doubling with kappa 2") {
    auto map = MapSpec::doubling();
    auto chk = rescaled_entropy_check(map, 2, GridPartition::generating_for(map), EntropicIndex(1.0), o);
    CHECK(chk.per_step_base == doctest::Approx(std::log(2.0)).epsilon(0.05));
    CHECK(chk.composed.slope == doctest::Approx(2 * std::log(2.0)).epsilon(0.05));
    CHECK(std::abs(chk.per_step_base - chk.per_step_composed) <= 2 * chk.combined_stderr + 0.01);
  }
  SUBCASE("quarter-turn rotation with kappa 4 is the identity") {
    auto map = MapSpec::rotation(1, 2);
    auto chk = rescaled_entropy_check(map, 4, GridPartition::generating_for(map), EntropicIndex(1.0), o);
    CHECK(std::abs(chk.per_step_base) < 1e-12);
    CHECK(std::abs(chk.per_step_composed) < 1e-12);
  }
  SUBCASE("kappa 1 is degenerate") {
    auto map = MapSpec::doubling();
    auto chk = rescaled_entropy_check(map, 1, GridPartition::generating_for(map), EntropicIndex(1.0), o);
    CHECK(chk.per_step_base == chk.per_step_composed);
    CHECK(chk.base.entropies == chk.composed.entropies);
  }
}

TEST_CASE("refinement invariants") {
  for (auto map : {MapSpec::doubling(), MapSpec::baker(), MapSpec::cat(), MapSpec::rotation(1, 3)}) {
    auto part = GridPartition::generating_for(map);
    auto atoms = refine(map, part, small(9));
    CAPTURE(map.name());
    for (double qv : {0.3, 1.0, 1.7}) {
      EntropicIndex q(qv);
      auto est = ks_entropy_estimate(atoms, q, default_window(9));
      for (int n = 0; n <= 9; ++n) {
        double h = est.entropies[static_cast<std::size_t>(n)];
        if (n > 0) CHECK(h >= est.entropies[static_cast<std::size_t>(n - 1)] - atoms.tolerance());
        double bound_atoms = qmath::q_log(static_cast<double>(atoms.atom_count(n)), q);
        double bound_cells = qmath::q_log(std::pow(part.cell_count(), n + 1), q);
        CHECK(h <= bound_atoms * (1 + 1e-12) + 1e-12);
        CHECK(bound_atoms <= bound_cells * (1 + 1e-12));
      }
      CHECK(est.slope >= -est.slope_stderr - 1e-12);
    }
    for (int n = 0; n <= 9; ++n) {
      auto marg = atoms.cell_marginal(n);
      REQUIRE(marg.size() == static_cast<std::size_t>(part.cell_count()));
      for (double m : marg) CHECK(std::abs(m - 1.0 / part.cell_count()) <= atoms.tolerance());
    }
  }
}

TEST_CASE("refinement is reproducible and independent of execution") {
  auto map = MapSpec::cat();
  auto part = GridPartition::generating_for(map);
  auto o = small(8, 300'000, 42);
  auto a = refine(map, part, o);
  auto b = refine(map, part, o);
  CHECK(a == b);
  o.execution = Execution::serial;
  auto c = refine(map, part, o);
  CHECK(a == c);
  o.seed = 43;
  CHECK_FALSE(refine(map, part, o) == a);
}

TEST_CASE("refinement validation") {
  auto map = MapSpec::doubling();
  auto part = GridPartition::generating_for(map);
  CHECK_THROWS_AS(refine(map, part, small(-1)), ValidationError);
  CHECK_THROWS_AS(refine(map, part, small(25)), ValidationError);
  CHECK_THROWS_AS(refine(map, part, small(4, 10)), ValidationError);
  // 16 cells need 4 bits per step, so 17 steps overflow a 64-bit key
  CHECK_THROWS_AS(refine(map, GridPartition(16, 1), small(16)), ValidationError);
  CHECK_THROWS_AS(GridPartition(0, 1), ValidationError);
  CHECK_THROWS_AS(GridPartition(17, 16), ValidationError);
  auto atoms = refine(map, part, small(4));
  CHECK_THROWS_AS(ks_entropy_estimate(atoms, EntropicIndex(1.0), FitWindow{3, 4}), ValidationError);
  CHECK_THROWS_AS(ks_entropy_estimate(atoms, EntropicIndex(1.0), FitWindow{2, 5}), ValidationError);
  CHECK_THROWS_AS(rescaled_entropy_check(map, 0, part, EntropicIndex(1.0), small(4)), ValidationError);
  CHECK_THROWS_AS(MapSpec::parse("tent"), ValidationError);
  CHECK_THROWS_AS(MapSpec::parse("rotation:1/0"), ValidationError);
  CHECK(MapSpec::parse("rotation:1/2").rotation_shift() == 0.25);
}
