#pragma once
#include <iosfwd>
#include <utility>
#include <vector>

namespace coex::eval {

// Euclidean distance between a predicted and a ground-truth grid location.
double localization_distance(std::pair<double, double> pred, std::pair<double, double> truth);

// Proportional rescaling of a coordinate from one grid resolution to another,
// e.g. mapping the avatar's world cell onto the attention grid. Uses the
// floor of the exact proportional position (integer arithmetic, no drift).
int rescale_cell(int cell, int from_grid, int to_grid);

// Adjusted Rand Index between two labelings of the same items. Follows the
// standard expected-index correction, so adversarial pairs may be slightly
// negative; degenerate pairs where the correction removes all mass (e.g. two
// single-cluster labelings) score 1 by convention.
double adjusted_rand_index(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

// Fixed-capacity window over a stream of reals with an O(1) running mean.
class RollingWindow {
 public:
  explicit RollingWindow(int capacity);

  void push(double v);
  double mean() const;  // over the values currently held; 0 when empty
  int size() const { return static_cast<int>(values_.size()); }
  int capacity() const { return capacity_; }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  int capacity_;
  int next_ = 0;  // ring slot the next push overwrites (once full)
  std::vector<double> values_;
};

// Episode-score protocol: the reported score of a run is the maximum, over
// training, of the mean return of the 40 most recent completed episodes.
class ScoreTracker {
 public:
  ScoreTracker() : window_(40) {}

  void record_episode(double episode_return, long long env_steps);

  double window_mean() const { return window_.mean(); }
  double max_mean() const { return max_mean_; }
  long long episodes() const { return episodes_; }
  long long env_steps() const { return env_steps_; }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  RollingWindow window_;
  double max_mean_ = 0.0;
  bool any_ = false;
  long long episodes_ = 0;
  long long env_steps_ = 0;
};

}  // namespace coex::eval
