#pragma once
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "coex/tensor.hpp"
#include "coex/world.hpp"

namespace coex::abstraction {

// Frames are shrunk/stretched to this shape before projection so the
// projector's input width is independent of the environment's frame size.
struct ProjectorConfig {
  int height = 48, width = 48, channels = 3;
  int dim = 64;
};

nd::Tensor resize_nearest(const nd::Tensor& frame, int out_h, int out_w);

// Fixed seeded random projection of flattened frames. Entries are drawn
// N(0, 1)/sqrt(dim) once at construction and never trained, so embedding
// distances are stable for the lifetime of a run.
class Projector {
 public:
  Projector(ProjectorConfig cfg, uint64_t seed);

  const ProjectorConfig& config() const { return cfg_; }
  uint64_t seed() const { return seed_; }

  nd::Tensor embed(const nd::Tensor& frame) const;  // [H,W,C] -> [dim]

 private:
  ProjectorConfig cfg_;
  uint64_t seed_ = 0;
  nd::Tensor matrix_;  // [dim, height*width*channels]
};

// Online threshold clustering over embeddings: an embedding joins the nearest
// cluster whose mean lies within tau (ties at tau join), otherwise it founds
// a new cluster. Means are exact arithmetic means of all members.
class ClusterSet {
 public:
  explicit ClusterSet(double tau);

  int assign(const nd::Tensor& embedding);  // returns the cluster id

  int size() const { return static_cast<int>(clusters_.size()); }
  long long members(int id) const;
  nd::Tensor mean(int id) const;
  double tau() const { return tau_; }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  double tau_;
  struct Cluster {
    long long count = 0;
    std::vector<double> sum;
  };
  std::vector<Cluster> clusters_;
};

// Discrete state summary: attention-grid location, visual context id, and the
// floor of the cumulative external reward collected this episode. c = -1
// means the configuration tracks no visual context component.
struct AbstractState {
  int x = 0, y = 0;
  int c = -1;
  long long R = 0;
  auto operator<=>(const AbstractState&) const = default;
};

AbstractState abstract_state(int x, int y, int c, double cumulative_reward);

// Component switches for representation ablations: disabling a component
// collapses it to a constant so the counter key space shrinks accordingly.
// The context id c always participates (it is the cheapest component and every
// studied variant keeps it).
struct PsiConfig {
  bool use_xy = true;
  bool use_reward = true;
};

AbstractState make_psi(int x, int y, int c, double cumulative_reward, const PsiConfig& cfg);

// Exact visitation counter over abstract states. Counting happens before the
// bonus is read, so the first visit pays 1/sqrt(1) = 1.
class VisitCounter {
 public:
  double count_and_bonus(const AbstractState& s);

  long long count(const AbstractState& s) const;  // 0 when unseen
  size_t distinct() const { return counts_.size(); }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  std::map<AbstractState, long long> counts_;
};

// Threshold calibration: render `frames_per_room` frames of every room with
// randomized avatar/distractor placements, embed them, and place tau halfway
// between the largest within-room and the smallest across-room distance.
double calibrate_tau(const world::World& w, const Projector& p, int frames_per_room,
                     uint64_t seed);

// cluster assignment audit rows: step,actor,cluster,room
std::string cluster_csv_header();
void cluster_csv_row(std::ostream& os, long long step, int actor, int cluster, int room);

}  // namespace coex::abstraction
