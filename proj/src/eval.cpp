#include "coex/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace coex::eval {

namespace {

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("eval state: truncated stream reading ") + what);
  return v;
}

double comb2(long long n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

}  // namespace

double localization_distance(std::pair<double, double> pred, std::pair<double, double> truth) {
  return std::hypot(pred.first - truth.first, pred.second - truth.second);
}

int rescale_cell(int cell, int from_grid, int to_grid) {
  if (from_grid <= 0 || to_grid <= 0) {
    throw std::invalid_argument("rescale_cell: grid sizes must be positive");
  }
  if (cell < 0 || cell >= from_grid) {
    throw std::invalid_argument("rescale_cell: cell " + std::to_string(cell) +
                                " outside grid of " + std::to_string(from_grid));
  }
  return static_cast<int>(static_cast<long long>(cell) * to_grid / from_grid);
}

double adjusted_rand_index(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size()) {
    throw std::invalid_argument("adjusted_rand_index: labelings differ in length (" +
                                std::to_string(labels_a.size()) + " vs " +
                                std::to_string(labels_b.size()) + ")");
  }
  const long long n = static_cast<long long>(labels_a.size());
  if (n < 2) throw std::invalid_argument("adjusted_rand_index: need at least 2 items");

  std::map<std::pair<int, int>, long long> joint;
  std::map<int, long long> count_a, count_b;
  for (long long i = 0; i < n; ++i) {
    ++joint[{labels_a[i], labels_b[i]}];
    ++count_a[labels_a[i]];
    ++count_b[labels_b[i]];
  }

  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, c] : joint) sum_joint += comb2(c);
  for (const auto& [key, c] : count_a) sum_a += comb2(c);
  for (const auto& [key, c] : count_b) sum_b += comb2(c);

  const double expected = sum_a * sum_b / comb2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;  // both labelings are pairwise-trivial and identical in structure
  return (sum_joint - expected) / denom;
}

RollingWindow::RollingWindow(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("RollingWindow: capacity must be positive");
  values_.reserve(static_cast<size_t>(capacity));
}

void RollingWindow::push(double v) {
  if (static_cast<int>(values_.size()) < capacity_) {
    values_.push_back(v);
  } else {
    values_[static_cast<size_t>(next_)] = v;
    next_ = (next_ + 1) % capacity_;
  }
}

double RollingWindow::mean() const {
  if (values_.empty()) return 0.0;
  double s = 0.0;
  for (double v : values_) s += v;
  return s / static_cast<double>(values_.size());
}

void RollingWindow::save(std::ostream& os) const {
  write_pod(os, capacity_);
  write_pod(os, next_);
  write_pod(os, static_cast<long long>(values_.size()));
  for (double v : values_) write_pod(os, v);
}

void RollingWindow::load(std::istream& is) {
  const int capacity = read_pod<int>(is, "window capacity");
  if (capacity != capacity_) {
    throw std::runtime_error("eval state: window capacity mismatch (" + std::to_string(capacity) +
                             " saved vs " + std::to_string(capacity_) + " configured)");
  }
  next_ = read_pod<int>(is, "window cursor");
  const long long count = read_pod<long long>(is, "window size");
  if (count < 0 || count > capacity_) throw std::runtime_error("eval state: corrupt window size");
  values_.clear();
  for (long long i = 0; i < count; ++i) values_.push_back(read_pod<double>(is, "window value"));
}

void ScoreTracker::record_episode(double episode_return, long long env_steps) {
  window_.push(episode_return);
  ++episodes_;
  env_steps_ = env_steps;
  const double m = window_.mean();
  max_mean_ = any_ ? std::max(max_mean_, m) : m;
  any_ = true;
}

void ScoreTracker::save(std::ostream& os) const {
  window_.save(os);
  write_pod(os, max_mean_);
  write_pod(os, any_);
  write_pod(os, episodes_);
  write_pod(os, env_steps_);
}

void ScoreTracker::load(std::istream& is) {
  window_.load(is);
  max_mean_ = read_pod<double>(is, "max mean");
  any_ = read_pod<bool>(is, "score flag");
  episodes_ = read_pod<long long>(is, "episode count");
  env_steps_ = read_pod<long long>(is, "env steps");
}

}  // namespace coex::eval
