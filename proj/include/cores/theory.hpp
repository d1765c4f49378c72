#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace cores {

// Finite joint distribution over (X, Y) with a per-feature noise transition
// matrix: M feature atoms, K classes, P(Y tilde = j | Y = i, X) enumerable
// exactly. Everything the theorem oracles consume.
struct DiscreteWorld {
  std::size_t num_atoms = 0;  // M, capped at 16
  int num_classes = 0;        // K, capped at 8

  std::vector<double> atom_probs;       // M, sums to 1
  std::vector<double> class_given_atom; // M x K rows, each sums to 1
  std::vector<double> transitions;      // M x K x K, each row sums to 1

  double px(std::size_t m) const { return atom_probs[m]; }
  double py_given_x(std::size_t m, int i) const {
    return class_given_atom[m * num_classes + i];
  }
  double t(std::size_t m, int i, int j) const {
    return transitions[(m * num_classes + i) * num_classes + j];
  }

  // Throws std::invalid_argument naming the offending atom/row when any
  // stochasticity constraint is broken (tolerance 1e-9) or caps exceeded.
  void validate() const;
};

std::vector<double> clean_class_priors(const DiscreteWorld& world);  // P(Y=i)
std::vector<double> noisy_class_priors(const DiscreteWorld& world);  // P(Y~=j)

// argmax_i P(Y=i|x) per atom, ties toward the smallest index.
std::vector<int> bayes_labels(const DiscreteWorld& world);

// True iff every P(Y|x) row is one-hot (the deterministic-label case).
bool assumption1_holds(const DiscreteWorld& world);

// Row-expected transition T_ij = E_{D|Y=i}[T_ij(X)], a K x K matrix.
// Throws when some class has zero marginal probability.
std::vector<double> row_expected_transition(const DiscreteWorld& world);

// Exact E over (X, Y, Y~) of  l(f(X), Y~) - beta * E_{P(Y~)}[l(f(X), Y~)],
// i.e. the regularized objective in expectation. f is an M x K table of
// probability rows; losses use the shared probability floor.
double exact_regularized_risk(const DiscreteWorld& world,
                              const std::vector<double>& f, double beta);

// The three-term decomposition of the exact regularized risk.
struct DecoupledTerms {
  double lhs = 0.0;
  double term1 = 0.0;  // T_underline * E_D[l]
  double term2 = 0.0;  // delta_bar * E_{D_delta}[l], 0 when delta_bar = 0
  double term3 = 0.0;  // sum_ij E[(U_ij(X) - beta P(Y~=j)) l(f(X), j)]
  double t_underline = 0.0;
  double delta_bar = 0.0;
  std::vector<double> delta;  // K, T_jj - T_underline
  std::vector<double> row_t;  // K x K expected transition
  std::vector<double> u;      // M x K x K, U_ij(X)
};

// Computes all pieces and verifies |lhs - (term1+term2+term3)| <= 1e-9;
// a mismatch means an implementation bug and throws
// DecouplingMismatchError.
DecoupledTerms decouple(const DiscreteWorld& world, const std::vector<double>& f,
                        double beta);

// The admissible regularizer-weight interval. upper is +infinity when no
// class pair has strictly ordered noisy priors (vacuous minimum).
struct BetaInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool feasible = false;
};

BetaInterval beta_interval(const DiscreteWorld& world);

// Informative-dataset condition: T_ii(X) - T_ij(X) > T_ii - T_jj for all
// i != j and every atom. Returns every violating triple.
struct Assumption2Result {
  struct Violation {
    std::size_t atom = 0;
    int i = 0;
    int j = 0;
  };
  bool holds = false;
  std::vector<Violation> violations;
};

Assumption2Result assumption2_check(const DiscreteWorld& world);

// Closed-form per-sample loss variance under a two-level loss: clean
// samples all at l_min (variance 0), an eps fraction lifted to l_max.
struct VarianceExample {
  double clean_var = 0.0;
  double noisy_var = 0.0;
};

VarianceExample variance_example(double eps, double l_max, double l_min);

// Label-shift safety threshold: min over class pairs of T_jj/(T_ii+T_jj)
// on the row-expected transition matrix.
double label_shift_bound(const DiscreteWorld& world);

// Brute force over all K^M one-hot prediction tables; returns the
// labeling(s) minimizing the exact regularized risk.
struct ConfidentMinimizer {
  std::vector<int> labels;  // the first minimizer in lexicographic order
  double risk = 0.0;
};

ConfidentMinimizer minimize_risk_over_confident_tables(const DiscreteWorld& world,
                                                       double beta);

// M x K table with row m one-hot at labels[m].
std::vector<double> one_hot_table(const std::vector<int>& labels, int num_classes);

// JSON serialization: {"atom_probs": [...], "class_given_atom": [[...]],
// "transitions": [[[...]]]}. Loader rewraps validation failures as
// ParseError naming the offending row.
DiscreteWorld load_world_json(const std::string& path);
void save_world_json(const DiscreteWorld& world, const std::string& path);

// FNV-1a hash over the canonical serialization, as fixed-width hex.
std::string world_hash(const DiscreteWorld& world);

}  // namespace cores
