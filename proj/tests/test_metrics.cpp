#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <vector>

#include "cores/datagen.hpp"
#include "cores/metrics.hpp"

using namespace cores;

TEST_CASE("sieve report on a hand-checked split") {
  // clean = labels agree; samples 0,1,3 clean; 2,4 corrupted.
  const std::vector<int> clean{0, 1, 2, 0, 1};
  const std::vector<int> noisy{0, 1, 1, 0, 2};
  const std::vector<std::uint8_t> v{1, 0, 1, 1, 0};

  const auto r = sieve_report(v, clean, noisy);
  CHECK(r.num_selected == 3);
  CHECK(r.num_clean == 3);
  // Selected {0,2,3}, of which {0,3} are clean: precision 2/3.
  CHECK(r.precision == doctest::Approx(2.0 / 3.0));
  // Clean {0,1,3}, of which {0,3} selected: recall 2/3.
  CHECK(r.recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.f_score == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("sieve report zero-denominator conventions") {
  const std::vector<int> clean{0, 1};
  SUBCASE("nothing selected") {
    const auto r = sieve_report({0, 0}, clean, {0, 1});
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f_score == 0.0);
  }
  SUBCASE("nothing clean") {
    const auto r = sieve_report({1, 1}, clean, {1, 0});
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f_score == 0.0);
  }
}

TEST_CASE("argmax breaks ties toward the smallest index") {
  CHECK(argmax_class(std::vector<double>{0.2, 0.4, 0.4}) == 1);
  CHECK(argmax_class(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == 0);
  CHECK(argmax_class(std::vector<double>{0.1, 0.2, 0.7}) == 2);
}

TEST_CASE("accuracy of a blank model on balanced data is one over K") {
  const auto data = make_blobs(400, 4, 3, 4.0, 3);
  const auto model = Classifier::make_linear(3, 4);
  // Uniform predictions argmax to class 0 everywhere; the blobs are
  // balanced, so exactly a quarter of the labels match.
  CHECK(test_accuracy(model, data) == doctest::Approx(0.25));
}

TEST_CASE("loss histogram rows carry the sieve margins") {
  const auto clean = make_blobs(50, 3, 4, 4.0, 5);
  const auto data = apply_symmetric_noise(clean, 0.3, false, 6);
  const auto model = Classifier::make_linear(4, 3);
  const auto prior = NoisyPrior::from_labels(data.noisy_labels, 3);

  const auto rows = loss_histogram(model, data, prior, 1.0);
  REQUIRE(rows.size() == data.num_samples);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    CHECK(rows[n].index == n);
    // Uniform predictions put every sample exactly on the boundary.
    CHECK(rows[n].centered_loss == 0.0);
    CHECK(rows[n].is_clean == (data.clean_labels[n] == data.noisy_labels[n]));
  }

  const auto path =
      (std::filesystem::temp_directory_path() / "cores_test_hist.csv").string();
  save_loss_histogram_csv(rows, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,centered_loss,is_clean");
  std::string first;
  std::getline(in, first);
  CHECK(first == std::string("0,0,") + (rows[0].is_clean ? "1" : "0"));
  std::filesystem::remove(path);
}
