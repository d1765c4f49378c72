#include "cores/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "cores/errors.hpp"
#include "cores/loss.hpp"

namespace cores {

namespace {

constexpr double kStochasticTol = 1e-9;
constexpr std::size_t kMaxAtoms = 16;
constexpr int kMaxClasses = 8;

void check_row(const double* row, std::size_t len, const std::string& what) {
  double total = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    if (!(row[i] >= 0.0 && row[i] <= 1.0))
      throw std::invalid_argument(what + ": entry out of [0, 1]");
    total += row[i];
  }
  if (std::abs(total - 1.0) > kStochasticTol)
    throw std::invalid_argument(what + ": row does not sum to 1");
}

}  // namespace

void DiscreteWorld::validate() const {
  if (num_atoms < 1 || num_atoms > kMaxAtoms)
    throw std::invalid_argument("world: atom count out of [1, 16]");
  if (num_classes < 2 || num_classes > kMaxClasses)
    throw std::invalid_argument("world: class count out of [2, 8]");
  const std::size_t k = static_cast<std::size_t>(num_classes);
  if (atom_probs.size() != num_atoms)
    throw std::invalid_argument("world: atom_probs length mismatch");
  if (class_given_atom.size() != num_atoms * k)
    throw std::invalid_argument("world: class_given_atom shape mismatch");
  if (transitions.size() != num_atoms * k * k)
    throw std::invalid_argument("world: transitions shape mismatch");
  check_row(atom_probs.data(), num_atoms, "world: atom_probs");
  for (std::size_t m = 0; m < num_atoms; ++m) {
    check_row(class_given_atom.data() + m * k, k,
              "world: class_given_atom atom " + std::to_string(m));
    for (std::size_t i = 0; i < k; ++i)
      check_row(transitions.data() + (m * k + i) * k, k,
                "world: transitions atom " + std::to_string(m) + " row " + std::to_string(i));
  }
}

std::vector<double> clean_class_priors(const DiscreteWorld& world) {
  std::vector<double> py(world.num_classes, 0.0);
  for (std::size_t m = 0; m < world.num_atoms; ++m)
    for (int i = 0; i < world.num_classes; ++i)
      py[i] += world.px(m) * world.py_given_x(m, i);
  return py;
}

std::vector<double> noisy_class_priors(const DiscreteWorld& world) {
  std::vector<double> pt(world.num_classes, 0.0);
  for (std::size_t m = 0; m < world.num_atoms; ++m)
    for (int i = 0; i < world.num_classes; ++i) {
      const double mass = world.px(m) * world.py_given_x(m, i);
      if (mass == 0.0) continue;
      for (int j = 0; j < world.num_classes; ++j) pt[j] += mass * world.t(m, i, j);
    }
  return pt;
}

std::vector<int> bayes_labels(const DiscreteWorld& world) {
  std::vector<int> labels(world.num_atoms, 0);
  for (std::size_t m = 0; m < world.num_atoms; ++m) {
    int best = 0;
    for (int i = 1; i < world.num_classes; ++i)
      if (world.py_given_x(m, i) > world.py_given_x(m, best)) best = i;
    labels[m] = best;
  }
  return labels;
}

bool assumption1_holds(const DiscreteWorld& world) {
  for (std::size_t m = 0; m < world.num_atoms; ++m)
    for (int i = 0; i < world.num_classes; ++i) {
      const double p = world.py_given_x(m, i);
      if (p != 0.0 && p != 1.0) return false;
    }
  return true;
}

std::vector<double> row_expected_transition(const DiscreteWorld& world) {
  const int k = world.num_classes;
  const std::vector<double> py = clean_class_priors(world);
  std::vector<double> row_t(static_cast<std::size_t>(k) * k, 0.0);
  for (int i = 0; i < k; ++i)
    if (py[i] <= 0.0)
      throw std::invalid_argument("world: class " + std::to_string(i) +
                                  " has zero probability");
  for (std::size_t m = 0; m < world.num_atoms; ++m)
    for (int i = 0; i < k; ++i) {
      const double w = world.px(m) * world.py_given_x(m, i) / py[i];
      if (w == 0.0) continue;
      for (int j = 0; j < k; ++j)
        row_t[static_cast<std::size_t>(i) * k + j] += w * world.t(m, i, j);
    }
  return row_t;
}

double exact_regularized_risk(const DiscreteWorld& world, const std::vector<double>& f,
                              double beta) {
  world.validate();
  const int k = world.num_classes;
  if (f.size() != world.num_atoms * static_cast<std::size_t>(k))
    throw std::invalid_argument("risk: prediction table shape mismatch");
  const std::vector<double> pt = noisy_class_priors(world);
  double risk = 0.0;
  for (std::size_t m = 0; m < world.num_atoms; ++m) {
    const std::span<const double> fx{f.data() + m * k, static_cast<std::size_t>(k)};
    for (int i = 0; i < k; ++i) {
      const double mass = world.px(m) * world.py_given_x(m, i);
      if (mass == 0.0) continue;
      for (int j = 0; j < k; ++j) risk += mass * world.t(m, i, j) * cross_entropy(fx, j);
    }
    for (int j = 0; j < k; ++j)
      risk -= beta * world.px(m) * pt[j] * cross_entropy(fx, j);
  }
  return risk;
}

DecoupledTerms decouple(const DiscreteWorld& world, const std::vector<double>& f,
                        double beta) {
  world.validate();
  const int k = world.num_classes;
  const std::size_t ks = static_cast<std::size_t>(k);
  if (f.size() != world.num_atoms * ks)
    throw std::invalid_argument("decouple: prediction table shape mismatch");

  DecoupledTerms out;
  out.lhs = exact_regularized_risk(world, f, beta);
  out.row_t = row_expected_transition(world);

  out.t_underline = out.row_t[0];
  for (int j = 1; j < k; ++j)
    out.t_underline = std::min(out.t_underline, out.row_t[static_cast<std::size_t>(j) * k + j]);

  const std::vector<double> py = clean_class_priors(world);
  out.delta.assign(ks, 0.0);
  out.delta_bar = 0.0;
  for (int j = 0; j < k; ++j) {
    out.delta[j] = out.row_t[static_cast<std::size_t>(j) * k + j] - out.t_underline;
    out.delta_bar += out.delta[j] * py[j];
  }

  out.u.assign(world.num_atoms * ks * ks, 0.0);
  for (std::size_t m = 0; m < world.num_atoms; ++m)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        double u = world.t(m, i, j);
        if (i == j) u -= out.row_t[static_cast<std::size_t>(i) * k + j];
        out.u[(m * ks + i) * ks + j] = u;
      }

  const std::vector<double> pt = noisy_class_priors(world);
  for (std::size_t m = 0; m < world.num_atoms; ++m) {
    const std::span<const double> fx{f.data() + m * ks, ks};
    for (int i = 0; i < k; ++i) {
      const double mass = world.px(m) * world.py_given_x(m, i);
      if (mass == 0.0) continue;
      out.term1 += out.t_underline * mass * cross_entropy(fx, i);
      out.term2 += out.delta[i] * mass * cross_entropy(fx, i);
      for (int j = 0; j < k; ++j)
        out.term3 += mass * (out.u[(m * ks + i) * ks + j] - beta * pt[j]) *
                     cross_entropy(fx, j);
    }
  }
  if (out.delta_bar == 0.0) out.term2 = 0.0;

  const double gap = std::abs(out.lhs - (out.term1 + out.term2 + out.term3));
  if (!(gap <= 1e-9))
    throw DecouplingMismatchError("decoupling identity violated by " + std::to_string(gap));
  return out;
}

BetaInterval beta_interval(const DiscreteWorld& world) {
  world.validate();
  const int k = world.num_classes;
  const std::size_t ks = static_cast<std::size_t>(k);
  const std::vector<double> row_t = row_expected_transition(world);
  const std::vector<double> pt = noisy_class_priors(world);
  for (int j = 0; j < k; ++j)
    if (pt[j] <= 0.0)
      throw std::invalid_argument("world: noisy class " + std::to_string(j) +
                                  " has zero probability");

  BetaInterval interval;
  interval.lower = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < world.num_atoms; ++m)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        double u = world.t(m, i, j);
        if (i == j) u -= row_t[static_cast<std::size_t>(i) * k + i];
        interval.lower = std::max(interval.lower, u / pt[j]);
      }

  interval.upper = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (!(pt[i] > pt[j])) continue;
      const double t_jj = row_t[static_cast<std::size_t>(j) * k + j];
      const double t_ii = row_t[static_cast<std::size_t>(i) * k + i];
      for (std::size_t m = 0; m < world.num_atoms; ++m) {
        const double bound =
            (t_jj - t_ii + world.t(m, i, i) - world.t(m, i, j)) / (pt[i] - pt[j]);
        interval.upper = std::min(interval.upper, bound);
      }
    }
  interval.feasible = interval.lower <= interval.upper;
  return interval;
}

Assumption2Result assumption2_check(const DiscreteWorld& world) {
  world.validate();
  const int k = world.num_classes;
  const std::vector<double> row_t = row_expected_transition(world);
  Assumption2Result result;
  for (std::size_t m = 0; m < world.num_atoms; ++m)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        if (i == j) continue;
        const double lhs = world.t(m, i, i) - world.t(m, i, j);
        const double rhs = row_t[static_cast<std::size_t>(i) * k + i] -
                           row_t[static_cast<std::size_t>(j) * k + j];
        if (!(lhs > rhs)) result.violations.push_back({m, i, j});
      }
  result.holds = result.violations.empty();
  return result;
}

VarianceExample variance_example(double eps, double l_max, double l_min) {
  if (!(eps >= 0.0 && eps <= 1.0))
    throw std::invalid_argument("variance_example: eps must lie in [0, 1]");
  if (!(l_max >= l_min))
    throw std::invalid_argument("variance_example: l_max must be >= l_min");
  const double spread = l_max - l_min;
  return {0.0, eps * (1.0 - eps) * spread * spread};
}

double label_shift_bound(const DiscreteWorld& world) {
  world.validate();
  const int k = world.num_classes;
  const std::vector<double> row_t = row_expected_transition(world);
  double bound = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double t_ii = row_t[static_cast<std::size_t>(i) * k + i];
      const double t_jj = row_t[static_cast<std::size_t>(j) * k + j];
      if (t_ii + t_jj <= 0.0) return 0.0;
      bound = std::min(bound, t_jj / (t_ii + t_jj));
    }
  return bound;
}

std::vector<double> one_hot_table(const std::vector<int>& labels, int num_classes) {
  std::vector<double> table(labels.size() * static_cast<std::size_t>(num_classes), 0.0);
  for (std::size_t m = 0; m < labels.size(); ++m) {
    if (labels[m] < 0 || labels[m] >= num_classes)
      throw std::invalid_argument("one_hot_table: label out of range");
    table[m * num_classes + labels[m]] = 1.0;
  }
  return table;
}

ConfidentMinimizer minimize_risk_over_confident_tables(const DiscreteWorld& world,
                                                       double beta) {
  world.validate();
  const int k = world.num_classes;
  const std::size_t m_atoms = world.num_atoms;
  double table_count = std::pow(static_cast<double>(k), static_cast<double>(m_atoms));
  if (table_count > 2e6)
    throw std::invalid_argument("confident-table enumeration too large (K^M > 2e6)");

  std::vector<int> labels(m_atoms, 0);
  ConfidentMinimizer best;
  best.labels = labels;
  best.risk = exact_regularized_risk(world, one_hot_table(labels, k), beta);
  for (;;) {
    // odometer increment over [K)^M
    std::size_t pos = 0;
    while (pos < m_atoms && ++labels[pos] == k) {
      labels[pos] = 0;
      ++pos;
    }
    if (pos == m_atoms) break;
    const double risk = exact_regularized_risk(world, one_hot_table(labels, k), beta);
    if (risk < best.risk) {
      best.risk = risk;
      best.labels = labels;
    }
  }
  return best;
}

namespace {

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

DiscreteWorld load_world_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad world JSON: ") + e.what());
  }
  DiscreteWorld world;
  try {
    const auto atom_probs = j.at("atom_probs").get<std::vector<double>>();
    const auto class_rows = j.at("class_given_atom").get<std::vector<std::vector<double>>>();
    const auto transition_stacks =
        j.at("transitions").get<std::vector<std::vector<std::vector<double>>>>();
    world.num_atoms = atom_probs.size();
    world.atom_probs = atom_probs;
    if (class_rows.size() != world.num_atoms || transition_stacks.size() != world.num_atoms)
      throw ParseError("world: atom counts disagree across sections");
    if (world.num_atoms == 0 || class_rows[0].empty())
      throw ParseError("world: empty");
    world.num_classes = static_cast<int>(class_rows[0].size());
    for (std::size_t m = 0; m < world.num_atoms; ++m) {
      if (class_rows[m].size() != static_cast<std::size_t>(world.num_classes))
        throw ParseError("world: class row " + std::to_string(m) + " has wrong length");
      world.class_given_atom.insert(world.class_given_atom.end(), class_rows[m].begin(),
                                    class_rows[m].end());
      if (transition_stacks[m].size() != static_cast<std::size_t>(world.num_classes))
        throw ParseError("world: transition stack " + std::to_string(m) +
                         " has wrong row count");
      for (std::size_t i = 0; i < transition_stacks[m].size(); ++i) {
        if (transition_stacks[m][i].size() != static_cast<std::size_t>(world.num_classes))
          throw ParseError("world: transition atom " + std::to_string(m) + " row " +
                           std::to_string(i) + " has wrong length");
        world.transitions.insert(world.transitions.end(), transition_stacks[m][i].begin(),
                                 transition_stacks[m][i].end());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad world JSON: ") + e.what());
  }
  try {
    world.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  return world;
}

void save_world_json(const DiscreteWorld& world, const std::string& path) {
  world.validate();
  const int k = world.num_classes;
  nlohmann::json j;
  j["atom_probs"] = world.atom_probs;
  nlohmann::json class_rows = nlohmann::json::array();
  nlohmann::json transition_stacks = nlohmann::json::array();
  for (std::size_t m = 0; m < world.num_atoms; ++m) {
    nlohmann::json row = nlohmann::json::array();
    for (int i = 0; i < k; ++i) row.push_back(world.py_given_x(m, i));
    class_rows.push_back(row);
    nlohmann::json stack = nlohmann::json::array();
    for (int i = 0; i < k; ++i) {
      nlohmann::json trow = nlohmann::json::array();
      for (int jj = 0; jj < k; ++jj) trow.push_back(world.t(m, i, jj));
      stack.push_back(trow);
    }
    transition_stacks.push_back(stack);
  }
  j["class_given_atom"] = class_rows;
  j["transitions"] = transition_stacks;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

std::string world_hash(const DiscreteWorld& world) {
  std::string canon;
  canon += std::to_string(world.num_atoms) + "x" + std::to_string(world.num_classes) + ";";
  for (double v : world.atom_probs) canon += format17(v) + ",";
  canon += ";";
  for (double v : world.class_given_atom) canon += format17(v) + ",";
  canon += ";";
  for (double v : world.transitions) canon += format17(v) + ",";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cores
