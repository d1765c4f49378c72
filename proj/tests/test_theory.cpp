#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "cores/errors.hpp"
#include "cores/loss.hpp"
#include "cores/rng.hpp"
#include "cores/theory.hpp"
#include "world_gen.hpp"

using namespace cores;

namespace {

// Second, structurally independent enumerator: walks the flat list of
// (atom, clean, noisy) triples for the data term and separate loops for
// the regularizer, instead of the nested conditional sums.
double enumerate_risk(const DiscreteWorld& w, const std::vector<double>& f,
                      double beta) {
  const int k = w.num_classes;
  struct Triple {
    std::size_t m;
    int y;
    int yt;
    double p;
  };
  std::vector<Triple> triples;
  for (std::size_t m = 0; m < w.num_atoms; ++m)
    for (int y = 0; y < k; ++y)
      for (int yt = 0; yt < k; ++yt)
        triples.push_back({m, y, yt, w.px(m) * w.py_given_x(m, y) * w.t(m, y, yt)});

  double data_term = 0.0;
  std::vector<double> noisy_prior(k, 0.0);
  for (const auto& t : triples) {
    const std::span<const double> row(f.data() + t.m * k, static_cast<std::size_t>(k));
    data_term += t.p * cross_entropy(row, t.yt);
    noisy_prior[t.yt] += t.p;
  }

  double reg_term = 0.0;
  for (std::size_t m = 0; m < w.num_atoms; ++m) {
    const std::span<const double> row(f.data() + m * k, static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) reg_term += w.px(m) * noisy_prior[j] * cross_entropy(row, j);
  }
  return data_term - beta * reg_term;
}

DiscreteWorld reference_world() {
  DiscreteWorld w;
  w.num_atoms = 2;
  w.num_classes = 2;
  w.atom_probs = {0.5, 0.5};
  w.class_given_atom = {1.0, 0.0, 0.0, 1.0};
  w.transitions = {0.8, 0.2, 0.3, 0.7, 0.9, 0.1, 0.4, 0.6};
  w.validate();
  return w;
}

DiscreteWorld feature_independent_world(std::vector<double> single_t, int k) {
  DiscreteWorld w;
  w.num_atoms = static_cast<std::size_t>(k);
  w.num_classes = k;
  w.atom_probs.assign(w.num_atoms, 1.0 / static_cast<double>(k));
  for (int a = 0; a < k; ++a)
    for (int c = 0; c < k; ++c) w.class_given_atom.push_back(a == c ? 1.0 : 0.0);
  for (std::size_t a = 0; a < w.num_atoms; ++a)
    w.transitions.insert(w.transitions.end(), single_t.begin(), single_t.end());
  w.validate();
  return w;
}

DiscreteWorld zero_noise_world(Rng& rng, std::size_t m, int k) {
  auto w = worldgen::random_world(rng, m, k, 0.0);
  return w;
}

}  // namespace

TEST_CASE("world validation names the broken row") {
  auto w = reference_world();
  SUBCASE("atom probs") {
    w.atom_probs[0] = 0.4;
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  }
  SUBCASE("transition row sum") {
    w.transitions[0] = 0.75;
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
    try {
      w.validate();
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("atom 0") != std::string::npos);
    }
  }
  SUBCASE("caps") {
    w.num_atoms = 17;
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  }
}

TEST_CASE("priors, bayes labels and row-expected transitions on the reference world") {
  const auto w = reference_world();
  const auto py = clean_class_priors(w);
  CHECK(py[0] == doctest::Approx(0.5));
  CHECK(py[1] == doctest::Approx(0.5));

  // P(Y~=0) = 0.5*0.8 + 0.5*0.4 = 0.6
  const auto pt = noisy_class_priors(w);
  CHECK(pt[0] == doctest::Approx(0.5 * 0.8 + 0.5 * 0.4));
  CHECK(pt[1] == doctest::Approx(0.5 * 0.2 + 0.5 * 0.6));

  CHECK(bayes_labels(w) == std::vector<int>{0, 1});
  CHECK(assumption1_holds(w));

  // Atom 1 is all class 0, atom 2 all class 1, so the row means pick one
  // atom each: row 0 from x1, row 1 from x2.
  const auto row_t = row_expected_transition(w);
  CHECK(row_t[0] == doctest::Approx(0.8));
  CHECK(row_t[1] == doctest::Approx(0.2));
  CHECK(row_t[2] == doctest::Approx(0.4));
  CHECK(row_t[3] == doctest::Approx(0.6));
}

TEST_CASE("exact risk matches the independent enumerator on the reference world") {
  const auto w = reference_world();
  const std::vector<double> f{0.75, 0.25, 0.2, 0.8};
  const double direct = exact_regularized_risk(w, f, 1.0);
  const double enumerated = enumerate_risk(w, f, 1.0);
  CHECK(std::abs(direct - enumerated) <= 1e-12);

  SUBCASE("beta enters linearly") {
    const double at0 = exact_regularized_risk(w, f, 0.0);
    const double at1 = exact_regularized_risk(w, f, 1.0);
    const double at2 = exact_regularized_risk(w, f, 2.0);
    CHECK(at2 - at1 == doctest::Approx(at1 - at0).epsilon(1e-12));
  }

  SUBCASE("identity transitions at beta 0 give the clean risk") {
    const auto clean = feature_independent_world({1.0, 0.0, 0.0, 1.0}, 2);
    const std::vector<double> g{0.9, 0.1, 0.3, 0.7};
    double expected = 0.0;
    expected += 0.5 * cross_entropy(std::span<const double>(g.data(), 2), 0);
    expected += 0.5 * cross_entropy(std::span<const double>(g.data() + 2, 2), 1);
    CHECK(exact_regularized_risk(clean, g, 0.0) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("decoupling identity holds on the reference world") {
  const auto w = reference_world();
  const std::vector<double> f{0.6, 0.4, 0.45, 0.55};
  const auto d = decouple(w, f, 1.0);
  CHECK(std::abs(d.lhs - (d.term1 + d.term2 + d.term3)) <= 1e-12);
  CHECK(d.lhs == doctest::Approx(enumerate_risk(w, f, 1.0)).epsilon(1e-12));
  // T_underline = min(0.8, 0.6)
  CHECK(d.t_underline == doctest::Approx(0.6));
  CHECK(d.delta[0] == doctest::Approx(0.2));
  CHECK(d.delta[1] == doctest::Approx(0.0));
  CHECK(d.delta_bar == doctest::Approx(0.1));
}

TEST_CASE("equal diagonals zero out the middle term") {
  // T(X) = (1-eps) I + eps/(K-1) (J - I) for every atom.
  const auto w = feature_independent_world({0.7, 0.15, 0.15, 0.2, 0.7, 0.1, 0.05,
                                            0.25, 0.7},
                                           3);
  Rng rng(5);
  const auto f = worldgen::random_table(rng, w.num_atoms, 3);
  const auto d = decouple(w, f, 1.3);
  for (double dj : d.delta) CHECK(dj == 0.0);
  CHECK(d.delta_bar == 0.0);
  CHECK(d.term2 == 0.0);
}

TEST_CASE("zero-noise world at beta 0 collapses to term 1") {
  Rng rng(6);
  const auto w = zero_noise_world(rng, 4, 3);
  const auto f = worldgen::random_table(rng, 4, 3);
  const auto d = decouple(w, f, 0.0);
  CHECK(d.t_underline == doctest::Approx(1.0));
  CHECK(d.term2 == doctest::Approx(0.0));
  CHECK(d.term3 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.term1 == doctest::Approx(d.lhs));
}

TEST_CASE("decoupling identity over randomized worlds") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + rng.uniform_index(4);     // 2..5
    const int k = 2 + static_cast<int>(rng.uniform_index(3));  // 2..4
    const auto w = worldgen::random_world(rng, m, k);
    const auto f = worldgen::random_table(rng, m, k);
    const double beta = 5.0 * rng.uniform();
    const auto d = decouple(w, f, beta);  // throws on identity failure
    CHECK(std::abs(d.lhs - enumerate_risk(w, f, beta)) <= 1e-9);
  }
}

TEST_CASE("beta interval on the symmetric balanced world") {
  // eps = 0.4, K = 2, balanced: off-diagonal U is 0.4, priors are 0.5,
  // and no strictly ordered prior pair exists.
  const auto w = feature_independent_world({0.6, 0.4, 0.4, 0.6}, 2);
  const auto b = beta_interval(w);
  CHECK(b.lower == doctest::Approx(0.8));
  CHECK(std::isinf(b.upper));
  CHECK(b.feasible);
}

TEST_CASE("beta interval on noiseless worlds starts at zero") {
  Rng rng(7);
  const auto w = zero_noise_world(rng, 3, 3);
  const auto b = beta_interval(w);
  CHECK(b.lower == doctest::Approx(0.0));
  CHECK(b.feasible);
}

TEST_CASE("dominant noisy prior with a thin diagonal gap is infeasible") {
  Rng rng(8);
  for (int trial = 0; trial < 8; ++trial) {
    const auto w = worldgen::infeasible_world(rng, 1 + trial % 3);
    const auto b = beta_interval(w);
    CHECK(b.lower > b.upper);
    CHECK_FALSE(b.feasible);
  }
}

TEST_CASE("interval lower end tracks single-atom noise growth") {
  // K = 2, uniform class posterior at every atom, per-atom flip rates.
  // Here the lower end reduces to 2 * max flip rate, so raising one
  // atom's rate can never lower it.
  auto build = [](const std::vector<double>& flips) {
    DiscreteWorld w;
    w.num_atoms = flips.size();
    w.num_classes = 2;
    w.atom_probs.assign(flips.size(), 1.0 / static_cast<double>(flips.size()));
    for (std::size_t a = 0; a < flips.size(); ++a) {
      w.class_given_atom.push_back(0.5);
      w.class_given_atom.push_back(0.5);
      w.transitions.push_back(1.0 - flips[a]);
      w.transitions.push_back(flips[a]);
      w.transitions.push_back(flips[a]);
      w.transitions.push_back(1.0 - flips[a]);
    }
    w.validate();
    return w;
  };

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> flips(3);
    for (auto& q : flips) q = 0.4 * rng.uniform();
    const std::size_t target = rng.uniform_index(3);
    const double before = beta_interval(build(flips)).lower;
    flips[target] += (0.49 - flips[target]) * rng.uniform();
    const double after = beta_interval(build(flips)).lower;
    CHECK(after >= before - 1e-12);
  }
}

TEST_CASE("assumption 2 verdicts") {
  SUBCASE("zero noise holds") {
    Rng rng(10);
    CHECK(assumption2_check(zero_noise_world(rng, 3, 3)).holds);
  }
  SUBCASE("uniform symmetric noise holds") {
    const auto w = feature_independent_world({0.7, 0.15, 0.15, 0.15, 0.7, 0.15, 0.15,
                                              0.15, 0.7},
                                             3);
    CHECK(assumption2_check(w).holds);
  }
  SUBCASE("a collapsed diagonal at one atom is reported") {
    DiscreteWorld w;
    w.num_atoms = 2;
    w.num_classes = 2;
    w.atom_probs = {0.5, 0.5};
    w.class_given_atom = {0.5, 0.5, 0.5, 0.5};
    // Atom 1: class 0 nearly always flips; atom 2 is clean.
    w.transitions = {0.2, 0.8, 0.05, 0.95, 1.0, 0.0, 0.0, 1.0};
    w.validate();
    const auto r = assumption2_check(w);
    REQUIRE_FALSE(r.holds);
    bool found = false;
    for (const auto& v : r.violations)
      if (v.atom == 0 && v.i == 0 && v.j == 1) found = true;
    CHECK(found);
  }
}

TEST_CASE("variance closed forms") {
  const auto zero = variance_example(0.0, 27.631, 0.0);
  CHECK(zero.clean_var == 0.0);
  CHECK(zero.noisy_var == 0.0);

  const auto v = variance_example(0.4, 27.631, 0.0);
  CHECK(v.clean_var == 0.0);
  CHECK(v.noisy_var == doctest::Approx(0.24 * 27.631 * 27.631).epsilon(1e-12));

  // Monte Carlo of the two-level construction.
  Rng rng(11);
  const double eps = 0.3, l_max = 5.0, l_min = 1.0;
  const int draws = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double loss = rng.uniform() < eps ? l_max : l_min;
    sum += loss;
    sum_sq += loss * loss;
  }
  const double mean = sum / draws;
  const double mc_var = sum_sq / draws - mean * mean;
  CHECK(mc_var == doctest::Approx(variance_example(eps, l_max, l_min).noisy_var)
                      .epsilon(0.02));
}

TEST_CASE("label shift bound") {
  SUBCASE("equal diagonals give one half") {
    const auto w = feature_independent_world({0.7, 0.15, 0.15, 0.15, 0.7, 0.15, 0.15,
                                              0.15, 0.7},
                                             3);
    CHECK(label_shift_bound(w) == doctest::Approx(0.5));
  }
  SUBCASE("0.8 vs 0.6 diagonals give three sevenths") {
    const auto w = feature_independent_world({0.8, 0.2, 0.4, 0.6}, 2);
    CHECK(label_shift_bound(w) == doctest::Approx(3.0 / 7.0));
  }
}

TEST_CASE("confident minimizer recovers bayes labels inside the interval") {
  Rng rng(12);
  int feasible_checked = 0;
  int attempts = 0;
  while (feasible_checked < 20 && attempts < 400) {
    ++attempts;
    const int k = 2 + static_cast<int>(rng.uniform_index(3));      // 2..4
    const std::size_t m = static_cast<std::size_t>(k) + rng.uniform_index(
        static_cast<std::size_t>(5 - k) + 1);                      // k..5
    const double q = 0.1 + 0.2 * rng.uniform();
    const auto w = worldgen::equal_diagonal_world(rng, m, k, q);
    REQUIRE(assumption1_holds(w));
    REQUIRE(assumption2_check(w).holds);

    const auto b = beta_interval(w);
    if (!b.feasible || !(b.lower < b.upper)) continue;
    ++feasible_checked;

    const double beta = std::isinf(b.upper) ? b.lower + 0.5
                                            : 0.5 * (b.lower + b.upper);
    const auto minimizer = minimize_risk_over_confident_tables(w, beta);
    CHECK(minimizer.labels == bayes_labels(w));
  }
  CHECK(feasible_checked == 20);
}

TEST_CASE("confident minimizer agrees with the per-atom closed form") {
  // Over one-hot tables the exact risk separates per atom and every atom
  // independently picks argmax_c [P(Y~=c|x) - beta P(Y~=c)].
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t m = 2 + rng.uniform_index(3);
    const int k = 2 + static_cast<int>(rng.uniform_index(2));
    const auto w = worldgen::random_world(rng, m, k);
    const double beta = 2.0 * rng.uniform();

    const auto pt = noisy_class_priors(w);
    std::vector<int> expected;
    for (std::size_t a = 0; a < m; ++a) {
      int best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double noisy_given_x = 0.0;
        for (int y = 0; y < k; ++y) noisy_given_x += w.py_given_x(a, y) * w.t(a, y, c);
        const double score = noisy_given_x - beta * pt[c];
        if (score > best_score + 1e-12) {
          best_score = score;
          best = c;
        }
      }
      expected.push_back(best);
    }
    const auto minimizer = minimize_risk_over_confident_tables(w, beta);
    CHECK(minimizer.labels == expected);
  }
}

TEST_CASE("world json round-trips and hashes stably") {
  const auto w = reference_world();
  const auto path =
      (std::filesystem::temp_directory_path() / "cores_test_world.json").string();
  save_world_json(w, path);
  const auto back = load_world_json(path);
  CHECK(back.atom_probs == w.atom_probs);
  CHECK(back.class_given_atom == w.class_given_atom);
  CHECK(back.transitions == w.transitions);
  CHECK(world_hash(back) == world_hash(w));
  std::filesystem::remove(path);

  auto other = w;
  other.transitions[0] = 0.81;
  other.transitions[1] = 0.19;
  CHECK(world_hash(other) != world_hash(w));
}

TEST_CASE("world json loader rejects malformed content") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "cores_test_world_bad.json").string();
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("{\"atom_probs\": [0.5, 0.6], \"class_given_atom\": [[1,0],[0,1]], "
               "\"transitions\": [[[1,0],[0,1]],[[1,0],[0,1]]]}",
               f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_world_json(path), ParseError);
  std::filesystem::remove(path);
}
