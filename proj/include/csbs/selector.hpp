#pragma once

// Clustered sequential backward selection over measurement planes.
//
// Starting from every candidate copy, each iteration removes the single copy
// whose removal raises the cost least, until `target_m` measurements remain.
// Removing one copy of a plane tried per iteration means the search is over
// multisets: a plane holding k copies can survive with any count 0..k.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "csbs/execution.hpp"
#include "csbs/inverse.hpp"
#include "csbs/optics.hpp"
#include "csbs/spectral.hpp"

namespace csbs {

struct CandidateSet {
  std::vector<double> plane_distances;   // strictly increasing, positive
  std::vector<int> initial_multiplicity;  // >= 1 each

  int size() const { return static_cast<int>(plane_distances.size()); }
  int total() const;
  void validate() const;

  // `count` planes uniformly spaced over [min_distance, max_distance].
  static CandidateSet uniform(double min_distance, double max_distance, int count, int copies);
};

struct Elimination {
  int plane = 0;
  double distance = 0.0;
  double cost = 0.0;  // cost of the configuration after this removal
};

struct SelectionState {
  std::vector<int> multiplicity;
  std::vector<Elimination> history;
  std::size_t evaluations = 0;
  double initial_cost = 0.0;

  double final_cost() const { return history.empty() ? initial_cost : history.back().cost; }
};

// Cost model that CSBS drives. `trial_cost` must not change observable state.
class IncrementalCost {
 public:
  virtual ~IncrementalCost() = default;
  virtual double current_cost() const = 0;
  virtual double trial_cost(int plane) const = 0;  // cost with one copy of `plane` removed
  virtual void remove(int plane) = 0;
  virtual const std::vector<int>& multiplicity() const = 0;
  // Whether concurrent trial_cost calls are safe.
  virtual bool concurrent_trials() const { return false; }
};

// Fast-path cost over a GramField, with every plane's contribution
// precomputed. Trials fuse the subtraction into the per-frequency solve, so
// the gram is never copied or modified; `remove` applies gram_update.
class GramCost final : public IncrementalCost {
 public:
  GramCost(const TransferCube& transfer, const PriorSpec& prior, double lambda,
           std::span<const int> initial_multiplicity, Exec exec = Exec::parallel);

  double current_cost() const override;
  double trial_cost(int plane) const override;
  void remove(int plane) override;
  const std::vector<int>& multiplicity() const override { return gram_.multiplicity(); }
  bool concurrent_trials() const override { return true; }

  const GramField& gram() const { return gram_; }
  double lambda() const { return lambda_; }

 private:
  PriorSpec prior_;
  double lambda_;
  Exec exec_;
  std::vector<PlaneContribution> contributions_;
  GramField gram_;
};

// Adapter for an arbitrary cost over multiplicity vectors (recomputes from
// scratch on every call).
class FunctionCost final : public IncrementalCost {
 public:
  using Fn = std::function<double(std::span<const int>)>;
  FunctionCost(Fn fn, std::vector<int> initial_multiplicity);

  double current_cost() const override;
  double trial_cost(int plane) const override;
  void remove(int plane) override;
  const std::vector<int>& multiplicity() const override { return multiplicity_; }

 private:
  Fn fn_;
  std::vector<int> multiplicity_;
};

enum class TrialSchedule { serial, parallel };

SelectionState run_csbs(const CandidateSet& candidates, int target_m, IncrementalCost& cost,
                    TrialSchedule schedule = TrialSchedule::serial);

struct ExhaustiveResult {
  std::vector<int> multiplicity;
  double cost = 0.0;
  std::size_t evaluations = 0;
};

inline constexpr std::size_t kMaxExhaustiveSubsets = 1'000'000;

// Number of size-`target_m` sub-multisets of `bounds`.
std::size_t count_submultisets(std::span<const int> bounds, int target_m);

ExhaustiveResult exhaustive(const CandidateSet& candidates, int target_m,
                            const std::function<double(std::span<const int>)>& cost_fn);

std::vector<int> focal_plane_config(const SieveParams& sieve, const SpectralSetup& setup,
                                    int total_m, const CandidateSet& candidates);

// Cost evaluations CSBS performs from `total` measurements down to
// `target_m` over `planes` candidates: sum_{k=M+1}^{T} min(C, k). Exact when
// every candidate starts with one copy (then sum_{k=M+1}^{C} k); an upper
// bound otherwise, since a plane drops out of the trials once exhausted.
std::size_t evaluation_count(int planes, int target_m, int total);

}  // namespace csbs
