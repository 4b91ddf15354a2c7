#include "csbs/selector.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "csbs/errors.hpp"

namespace csbs {

int CandidateSet::total() const {
  return std::accumulate(initial_multiplicity.begin(), initial_multiplicity.end(), 0);
}

void CandidateSet::validate() const {
  if (plane_distances.empty()) throw std::invalid_argument("candidate set is empty");
  if (initial_multiplicity.size() != plane_distances.size())
    throw std::invalid_argument("candidate set needs one multiplicity per plane");
  for (std::size_t i = 0; i < plane_distances.size(); ++i) {
    if (!(plane_distances[i] > 0.0))
      throw std::invalid_argument("candidate distances must be positive");
    if (i > 0 && !(plane_distances[i] > plane_distances[i - 1]))
      throw std::invalid_argument("candidate distances must be strictly increasing");
    if (initial_multiplicity[i] < 1)
      throw std::invalid_argument("candidate multiplicities must be at least 1");
  }
}

CandidateSet CandidateSet::uniform(double min_distance, double max_distance, int count,
                                   int copies) {
  if (count < 1) throw std::invalid_argument("candidate count must be at least 1");
  if (copies < 1) throw std::invalid_argument("copies per plane must be at least 1");
  if (count > 1 && !(max_distance > min_distance))
    throw std::invalid_argument("candidate range is empty");
  CandidateSet set;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    set.plane_distances.push_back(min_distance + t * (max_distance - min_distance));
  }
  set.initial_multiplicity.assign(static_cast<std::size_t>(count), copies);
  set.validate();
  return set;
}

GramCost::GramCost(const TransferCube& transfer, const PriorSpec& prior, double lambda,
                   std::span<const int> initial_multiplicity, Exec exec)
    : prior_(prior), lambda_(lambda), exec_(exec),
      gram_(assemble_gram(transfer, initial_multiplicity, exec)) {
  if (!(lambda > 0.0)) throw std::invalid_argument("GramCost: lambda must be positive");
  contributions_.reserve(static_cast<std::size_t>(transfer.planes()));
  for (int c = 0; c < transfer.planes(); ++c)
    contributions_.push_back(plane_contribution(transfer, c, exec));
}

double GramCost::current_cost() const { return cost_fast(gram_, prior_, lambda_, exec_); }

double GramCost::trial_cost(int plane) const {
  if (plane < 0 || static_cast<std::size_t>(plane) >= contributions_.size())
    throw std::invalid_argument("GramCost: plane index out of range");
  return cost_fast_without(gram_, contributions_[static_cast<std::size_t>(plane)], prior_, lambda_,
                           exec_);
}

void GramCost::remove(int plane) {
  if (plane < 0 || static_cast<std::size_t>(plane) >= contributions_.size())
    throw std::invalid_argument("GramCost: plane index out of range");
  gram_update(gram_, contributions_[static_cast<std::size_t>(plane)], UpdateSign::subtract, exec_);
}

FunctionCost::FunctionCost(Fn fn, std::vector<int> initial_multiplicity)
    : fn_(std::move(fn)), multiplicity_(std::move(initial_multiplicity)) {}

double FunctionCost::current_cost() const { return fn_(multiplicity_); }

double FunctionCost::trial_cost(int plane) const {
  std::vector<int> trial = multiplicity_;
  if (plane < 0 || static_cast<std::size_t>(plane) >= trial.size() || trial[static_cast<std::size_t>(plane)] < 1)
    throw InvalidState("FunctionCost: plane " + std::to_string(plane) + " has no copy to remove");
  --trial[static_cast<std::size_t>(plane)];
  return fn_(trial);
}

void FunctionCost::remove(int plane) {
  if (plane < 0 || static_cast<std::size_t>(plane) >= multiplicity_.size() ||
      multiplicity_[static_cast<std::size_t>(plane)] < 1)
    throw InvalidState("FunctionCost: plane " + std::to_string(plane) + " has no copy to remove");
  --multiplicity_[static_cast<std::size_t>(plane)];
}

SelectionState run_csbs(const CandidateSet& candidates, int target_m, IncrementalCost& cost,
                    TrialSchedule schedule) {
  candidates.validate();
  int total = candidates.total();
  if (target_m < 1) throw std::invalid_argument("run_csbs: target must be at least 1");
  if (target_m > total)
    throw std::invalid_argument("run_csbs: target " + std::to_string(target_m) + " exceeds the " +
                                std::to_string(total) + " available measurements");
  if (cost.multiplicity() != candidates.initial_multiplicity)
    throw std::invalid_argument("run_csbs: cost model does not start from the candidate multiset");

  SelectionState state;
  state.initial_cost = cost.current_cost();
  std::vector<int> active;
  std::vector<double> trials;
  while (total > target_m) {
    active.clear();
    const auto& mult = cost.multiplicity();
    for (std::size_t c = 0; c < mult.size(); ++c)
      if (mult[c] > 0) active.push_back(static_cast<int>(c));
    trials.assign(active.size(), 0.0);

    const auto n = static_cast<std::ptrdiff_t>(active.size());
    if (schedule == TrialSchedule::parallel && cost.concurrent_trials()) {
      std::exception_ptr error;
      std::ptrdiff_t error_at = n;
#pragma omp parallel for schedule(dynamic)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
          trials[static_cast<std::size_t>(i)] = cost.trial_cost(active[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical(csbs_trial_error)
          if (i < error_at) {
            error_at = i;
            error = std::current_exception();
          }
        }
      }
      if (error) std::rethrow_exception(error);
    } else {
      for (std::ptrdiff_t i = 0; i < n; ++i)
        trials[static_cast<std::size_t>(i)] = cost.trial_cost(active[static_cast<std::size_t>(i)]);
    }
    state.evaluations += active.size();

    std::size_t best = 0;
    for (std::size_t i = 1; i < trials.size(); ++i)
      if (trials[i] < trials[best]) best = i;
    const int plane = active[best];
    cost.remove(plane);
    state.history.push_back(
        {plane, candidates.plane_distances[static_cast<std::size_t>(plane)], trials[best]});
    --total;
  }
  state.multiplicity = cost.multiplicity();
  return state;
}

std::size_t count_submultisets(std::span<const int> bounds, int target_m) {
  if (target_m < 0) return 0;
  constexpr std::size_t cap = std::numeric_limits<std::size_t>::max() / 2;
  std::vector<std::size_t> ways(static_cast<std::size_t>(target_m) + 1, 0);
  ways[0] = 1;
  for (int b : bounds) {
    std::vector<std::size_t> next(ways.size(), 0);
    for (std::size_t k = 0; k < ways.size(); ++k) {
      if (ways[k] == 0) continue;
      for (int j = 0; j <= b && k + static_cast<std::size_t>(j) < ways.size(); ++j)
        next[k + static_cast<std::size_t>(j)] = std::min(cap, next[k + static_cast<std::size_t>(j)] + ways[k]);
    }
    ways = std::move(next);
  }
  return ways.back();
}

namespace {

struct Enumerator {
  std::span<const int> bounds;
  std::vector<int> suffix;  // suffix[i] = sum of bounds[i..]
  const std::function<double(std::span<const int>)>& cost_fn;
  std::vector<int> current;
  ExhaustiveResult best;
  bool found = false;

  void visit(std::size_t i, int remaining) {
    if (i == bounds.size()) {
      if (remaining != 0) return;
      const double c = cost_fn(current);
      ++best.evaluations;
      if (!found || c < best.cost) {
        best.cost = c;
        best.multiplicity = current;
        found = true;
      }
      return;
    }
    // Ascending counts per plane visit vectors in lexicographic order, so
    // a strict improvement test keeps the lexicographically smallest tie.
    for (int k = 0; k <= std::min(bounds[i], remaining); ++k) {
      if (remaining - k > suffix[i + 1]) continue;
      current[i] = k;
      visit(i + 1, remaining - k);
    }
    current[i] = 0;
  }
};

}  // namespace

ExhaustiveResult exhaustive(const CandidateSet& candidates, int target_m,
                            const std::function<double(std::span<const int>)>& cost_fn) {
  candidates.validate();
  if (target_m < 1 || target_m > candidates.total())
    throw std::invalid_argument("exhaustive: target outside 1..total measurements");
  const std::size_t subsets = count_submultisets(candidates.initial_multiplicity, target_m);
  if (subsets > kMaxExhaustiveSubsets)
    throw std::invalid_argument("exhaustive: " + std::to_string(subsets) +
                                " subsets exceed the enumeration guard of " +
                                std::to_string(kMaxExhaustiveSubsets));
  Enumerator e{candidates.initial_multiplicity, {}, cost_fn, {}, {}, false};
  e.suffix.assign(e.bounds.size() + 1, 0);
  for (std::size_t i = e.bounds.size(); i-- > 0;) e.suffix[i] = e.suffix[i + 1] + e.bounds[i];
  e.current.assign(e.bounds.size(), 0);
  e.visit(0, target_m);
  return e.best;
}

std::vector<int> focal_plane_config(const SieveParams& sieve, const SpectralSetup& setup,
                                    int total_m, const CandidateSet& candidates) {
  candidates.validate();
  const int S = setup.size();
  if (total_m < S)
    throw std::invalid_argument("focal_plane_config: need at least one measurement per source");
  std::vector<int> multiplicity(static_cast<std::size_t>(candidates.size()), 0);
  const int base = total_m / S;
  const int extra = total_m % S;
  for (int s = 0; s < S; ++s) {
    const double f = focal_length(sieve, setup[s]);
    std::size_t nearest = 0;
    for (std::size_t c = 1; c < candidates.plane_distances.size(); ++c)
      if (std::abs(candidates.plane_distances[c] - f) <
          std::abs(candidates.plane_distances[nearest] - f))
        nearest = c;
    multiplicity[nearest] += base + (s < extra ? 1 : 0);
  }
  return multiplicity;
}

std::size_t evaluation_count(int planes, int target_m, int total) {
  std::size_t count = 0;
  for (int k = target_m + 1; k <= total; ++k) count += static_cast<std::size_t>(std::min(planes, k));
  return count;
}

}  // namespace csbs
