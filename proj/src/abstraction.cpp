#include "coex/abstraction.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "coex/rng.hpp"

namespace coex::abstraction {

using nd::Tensor;

namespace {

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) {
    throw std::runtime_error(std::string("abstraction: truncated stream reading ") + what);
  }
  return v;
}

}  // namespace

Tensor resize_nearest(const Tensor& frame, int out_h, int out_w) {
  if (frame.rank() != 3) {
    throw std::invalid_argument("resize_nearest: expected [H,W,C], got " + frame.shape_str());
  }
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_nearest: empty target");
  const int in_h = frame.dim(0), in_w = frame.dim(1), ch = frame.dim(2);
  Tensor out({out_h, out_w, ch});
  for (int y = 0; y < out_h; ++y) {
    const int sy = static_cast<int>(static_cast<long long>(y) * in_h / out_h);
    for (int x = 0; x < out_w; ++x) {
      const int sx = static_cast<int>(static_cast<long long>(x) * in_w / out_w);
      const double* src = frame.data() + (static_cast<size_t>(sy) * in_w + sx) * ch;
      double* dst = out.data() + (static_cast<size_t>(y) * out_w + x) * ch;
      for (int c = 0; c < ch; ++c) dst[c] = src[c];
    }
  }
  return out;
}

Projector::Projector(ProjectorConfig cfg, uint64_t seed) : cfg_(cfg), seed_(seed) {
  if (cfg_.height < 1 || cfg_.width < 1 || cfg_.channels < 1 || cfg_.dim < 1) {
    throw std::invalid_argument("projector: all dimensions must be positive");
  }
  const int flat = cfg_.height * cfg_.width * cfg_.channels;
  matrix_ = Tensor({cfg_.dim, flat});
  Rng rng(child_seed(seed, "projector"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.dim));
  for (size_t i = 0; i < matrix_.size(); ++i) matrix_[i] = rng.next_gaussian() * scale;
}

Tensor Projector::embed(const Tensor& frame) const {
  if (frame.rank() != 3 || frame.dim(2) != cfg_.channels) {
    throw std::invalid_argument("projector: expected [H,W," + std::to_string(cfg_.channels) +
                                "], got " + frame.shape_str());
  }
  const Tensor* source = &frame;
  Tensor resized;
  if (frame.dim(0) != cfg_.height || frame.dim(1) != cfg_.width) {
    resized = resize_nearest(frame, cfg_.height, cfg_.width);
    source = &resized;
  }
  const int flat = cfg_.height * cfg_.width * cfg_.channels;
  Tensor out({cfg_.dim});
  using CMapM = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>;
  using CMapV = Eigen::Map<const Eigen::VectorXd>;
  using MapV = Eigen::Map<Eigen::VectorXd>;
  MapV(out.data(), cfg_.dim).noalias() =
      CMapM(matrix_.data(), cfg_.dim, flat) * CMapV(source->data(), flat);
  return out;
}

ClusterSet::ClusterSet(double tau) : tau_(tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("clustering threshold must be positive");
}

int ClusterSet::assign(const Tensor& embedding) {
  const size_t d = embedding.size();
  if (!clusters_.empty() && clusters_[0].sum.size() != d) {
    throw std::invalid_argument("cluster assign: embedding length " + std::to_string(d) +
                                " does not match existing clusters");
  }

  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < clusters_.size(); ++k) {
    const Cluster& c = clusters_[k];
    double sq = 0.0;
    for (size_t i = 0; i < d; ++i) {
      const double diff = c.sum[i] / c.count - embedding[i];
      sq += diff * diff;
    }
    const double dist = std::sqrt(sq);
    if (dist <= tau_ && dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(k);
    }
  }

  if (best < 0) {
    Cluster fresh;
    fresh.count = 1;
    fresh.sum.assign(embedding.data(), embedding.data() + d);
    clusters_.push_back(std::move(fresh));
    return static_cast<int>(clusters_.size()) - 1;
  }
  Cluster& c = clusters_[static_cast<size_t>(best)];
  c.count += 1;
  for (size_t i = 0; i < d; ++i) c.sum[i] += embedding[i];
  return best;
}

long long ClusterSet::members(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("cluster id out of range");
  return clusters_[static_cast<size_t>(id)].count;
}

Tensor ClusterSet::mean(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("cluster id out of range");
  const Cluster& c = clusters_[static_cast<size_t>(id)];
  Tensor m({static_cast<int>(c.sum.size())});
  for (size_t i = 0; i < c.sum.size(); ++i) m[i] = c.sum[i] / c.count;
  return m;
}

void ClusterSet::save(std::ostream& os) const {
  write_pod<double>(os, tau_);
  write_pod<uint64_t>(os, clusters_.size());
  for (const Cluster& c : clusters_) {
    write_pod<int64_t>(os, c.count);
    write_pod<uint64_t>(os, c.sum.size());
    os.write(reinterpret_cast<const char*>(c.sum.data()),
             static_cast<std::streamsize>(sizeof(double) * c.sum.size()));
  }
}

void ClusterSet::load(std::istream& is) {
  const double tau = read_pod<double>(is, "tau");
  const auto n = read_pod<uint64_t>(is, "cluster count");
  std::vector<Cluster> fresh(n);
  for (auto& c : fresh) {
    c.count = read_pod<int64_t>(is, "member count");
    const auto d = read_pod<uint64_t>(is, "sum length");
    c.sum.resize(d);
    is.read(reinterpret_cast<char*>(c.sum.data()),
            static_cast<std::streamsize>(sizeof(double) * d));
    if (!is) throw std::runtime_error("abstraction: truncated stream reading cluster sums");
  }
  tau_ = tau;
  clusters_ = std::move(fresh);
}

AbstractState abstract_state(int x, int y, int c, double cumulative_reward) {
  AbstractState s;
  s.x = x;
  s.y = y;
  s.c = c;
  s.R = static_cast<long long>(std::floor(cumulative_reward));
  return s;
}

AbstractState make_psi(int x, int y, int c, double cumulative_reward, const PsiConfig& cfg) {
  return abstract_state(cfg.use_xy ? x : 0, cfg.use_xy ? y : 0, c,
                        cfg.use_reward ? cumulative_reward : 0.0);
}

double VisitCounter::count_and_bonus(const AbstractState& s) {
  long long& n = counts_[s];
  n += 1;
  return 1.0 / std::sqrt(static_cast<double>(n));
}

long long VisitCounter::count(const AbstractState& s) const {
  auto it = counts_.find(s);
  return it == counts_.end() ? 0 : it->second;
}

void VisitCounter::save(std::ostream& os) const {
  write_pod<uint64_t>(os, counts_.size());
  for (const auto& [key, n] : counts_) {
    write_pod<int32_t>(os, key.x);
    write_pod<int32_t>(os, key.y);
    write_pod<int32_t>(os, key.c);
    write_pod<int64_t>(os, key.R);
    write_pod<int64_t>(os, n);
  }
}

void VisitCounter::load(std::istream& is) {
  const auto n = read_pod<uint64_t>(is, "counter size");
  std::map<AbstractState, long long> fresh;
  for (uint64_t i = 0; i < n; ++i) {
    AbstractState key;
    key.x = read_pod<int32_t>(is, "counter key");
    key.y = read_pod<int32_t>(is, "counter key");
    key.c = read_pod<int32_t>(is, "counter key");
    key.R = read_pod<int64_t>(is, "counter key");
    fresh[key] = read_pod<int64_t>(is, "counter value");
  }
  counts_ = std::move(fresh);
}

double calibrate_tau(const world::World& w, const Projector& p, int frames_per_room,
                     uint64_t seed) {
  if (frames_per_room < 2) throw std::invalid_argument("calibrate_tau: need 2+ frames per room");
  const auto& cfg = w.config();
  const int rooms = static_cast<int>(cfg.rooms.size());
  Rng rng(child_seed(seed, "tau"));

  // candidate cells a sprite may occupy, per room
  std::vector<std::vector<int>> floors(rooms);
  for (int r = 0; r < rooms; ++r) {
    for (int i = 0; i < cfg.grid; ++i) {
      for (int j = 0; j < cfg.grid; ++j) {
        const char t = cfg.rooms[static_cast<size_t>(r)][static_cast<size_t>(i)]
                                [static_cast<size_t>(j)];
        if (t == '.' || t == 'S') floors[static_cast<size_t>(r)].push_back(i * cfg.grid + j);
      }
    }
  }

  std::vector<Tensor> embeddings;
  std::vector<int> room_of;
  for (int r = 0; r < rooms; ++r) {
    const auto& cells = floors[static_cast<size_t>(r)];
    if (cells.empty()) continue;
    for (int k = 0; k < frames_per_room; ++k) {
      world::WorldState s;
      s.room = r;
      const int cell = cells[static_cast<size_t>(rng.next_int(static_cast<int>(cells.size())))];
      s.avatar_row = cell / cfg.grid;
      s.avatar_col = cell % cfg.grid;
      s.collected.assign(w.items().size(), 0);
      for (int d = 0; d < cfg.distractors_per_room; ++d) {
        world::Distractor dd;
        dd.room = r;
        const int dc = cells[static_cast<size_t>(rng.next_int(static_cast<int>(cells.size())))];
        dd.row = dc / cfg.grid;
        dd.col = dc % cfg.grid;
        s.distractors.push_back(dd);
      }
      embeddings.push_back(p.embed(w.render_state(s)));
      room_of.push_back(r);
    }
  }
  if (embeddings.size() < 2) throw std::invalid_argument("calibrate_tau: world has no floor");

  double max_within = 0.0;
  double min_across = std::numeric_limits<double>::infinity();
  const size_t d = embeddings[0].size();
  for (size_t i = 0; i < embeddings.size(); ++i) {
    for (size_t j = i + 1; j < embeddings.size(); ++j) {
      double sq = 0.0;
      for (size_t k = 0; k < d; ++k) {
        const double diff = embeddings[i][k] - embeddings[j][k];
        sq += diff * diff;
      }
      const double dist = std::sqrt(sq);
      if (room_of[i] == room_of[j]) {
        max_within = std::max(max_within, dist);
      } else {
        min_across = std::min(min_across, dist);
      }
    }
  }
  if (!std::isfinite(min_across)) return max_within + 1.0;  // single-room world
  return 0.5 * (max_within + min_across);
}

std::string cluster_csv_header() { return "step,actor,cluster,room"; }

void cluster_csv_row(std::ostream& os, long long step, int actor, int cluster, int room) {
  os << step << ',' << actor << ',' << cluster << ',' << room << '\n';
}

}  // namespace coex::abstraction
