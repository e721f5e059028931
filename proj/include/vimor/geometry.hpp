#pragma once

// Agent/obstacle geometry for the discrete crowd-contact problem: gap
// functions, the constraint Jacobian and per-step contact-system assembly.
//
// Contact rows are ordered lexicographically: all agent pairs (i < j) first,
// then (agent, obstacle entity) pairs agent-major. The ordering is fixed so
// snapshot indices stay stable across runs.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include "vimor/common.hpp"

namespace vimor::geom {

struct Segment {
  Vec2 a, b;
};

// Axis-aligned rectangle.
struct Rect {
  double xmin, ymin, xmax, ymax;
};

struct Disk {
  Vec2 center;
  double radius;
};

using Piece = std::variant<Segment, Rect, Disk>;

// One contact entity. Most obstacles are a single convex piece; the exit
// barrier is the pair of collinear wall segments flanking the exit, acting
// as one entity whose gap is the distance to the nearest piece.
struct Obstacle {
  std::vector<Piece> pieces;
};

struct Scenario {
  double hall_width = 6.0;    // x extent of the hall
  double hall_height = 2.0;   // y extent; the exit sits on y = hall_height
  double exit_width = 2.0;
  double wall_length = 2.0;   // reference barrier wall length (exit centered)
  bool include_exit_barrier = true;
  std::vector<Obstacle> extra_obstacles;

  int n_agents = 20;
  double agent_radius = 0.1;
  double time_step = 0.05;
  int horizon = 60;               // N^T
  bool run_until_exit = false;
  bool subtract_radius_for_obstacles = true;

  // Barrier plus extra obstacles, with the barrier realized for the current
  // exit width. Wall pieces: [0, (l_hall-l_exit)/2] and the mirror image.
  std::vector<Obstacle> obstacles() const {
    std::vector<Obstacle> out;
    if (include_exit_barrier) {
      const double lw = 0.5 * (hall_width - exit_width);
      Obstacle barrier;
      barrier.pieces.push_back(
          Segment{Vec2(0.0, hall_height), Vec2(lw, hall_height)});
      barrier.pieces.push_back(
          Segment{Vec2(hall_width - lw, hall_height), Vec2(hall_width, hall_height)});
      out.push_back(std::move(barrier));
    }
    out.insert(out.end(), extra_obstacles.begin(), extra_obstacles.end());
    return out;
  }

  int n_obstacle_entities() const {
    return (include_exit_barrier ? 1 : 0) + static_cast<int>(extra_obstacles.size());
  }

  int n_contacts() const {
    const int na = n_agents;
    return na * (na - 1) / 2 + na * n_obstacle_entities();
  }

  Vec2 exit_midpoint() const { return Vec2(0.5 * hall_width, hall_height); }

  Scenario with_exit(double l_exit) const {
    Scenario s = *this;
    s.exit_width = l_exit;
    return s;
  }

  void validate() const {
    if (n_agents <= 0) throw ConfigError("scenario: n_agents must be positive");
    if (agent_radius <= 0.0) throw ConfigError("scenario: agent_radius must be positive");
    if (time_step <= 0.0) throw ConfigError("scenario: time_step must be positive");
    if (include_exit_barrier && exit_width <= 2.0 * agent_radius)
      throw ConfigError("scenario: exit_width must exceed the agent diameter");
  }
};

namespace detail {

struct GapGrad {
  double gap;   // distance before the agent-radius correction
  Vec2 dir;     // unit outward direction (d gap / d position)
  bool degenerate = false;
};

inline GapGrad segment_gap(const Vec2& p, const Segment& s) {
  const Vec2 ab = s.b - s.a;
  const double L2 = ab.squaredNorm();
  Vec2 np;
  if (L2 == 0.0) {
    np = s.a;
  } else {
    const double t = std::clamp((p - s.a).dot(ab) / L2, 0.0, 1.0);
    np = s.a + t * ab;
  }
  const Vec2 diff = p - np;
  const double dist = diff.norm();
  if (dist == 0.0) return {0.0, Vec2(0.0, 0.0), true};
  return {dist, diff / dist, false};
}

// Signed for rectangles: negative inside, with the outward normal of the
// nearest edge. Edge order left/right/bottom/top breaks interior ties.
inline GapGrad rect_gap(const Vec2& p, const Rect& r) {
  const double cx = std::clamp(p.x(), r.xmin, r.xmax);
  const double cy = std::clamp(p.y(), r.ymin, r.ymax);
  if (p.x() != cx || p.y() != cy) {
    const Vec2 diff = p - Vec2(cx, cy);
    const double dist = diff.norm();
    return {dist, diff / dist, false};
  }
  const double d[4] = {p.x() - r.xmin, r.xmax - p.x(), p.y() - r.ymin,
                       r.ymax - p.y()};
  static const Vec2 normals[4] = {Vec2(-1, 0), Vec2(1, 0), Vec2(0, -1),
                                  Vec2(0, 1)};
  int best = 0;
  for (int k = 1; k < 4; ++k)
    if (d[k] < d[best]) best = k;
  return {-d[best], normals[best], false};
}

// Signed for disks: negative inside, direction away from the center.
inline GapGrad disk_gap(const Vec2& p, const Disk& d) {
  const Vec2 diff = p - d.center;
  const double dist = diff.norm();
  if (dist == 0.0) return {-d.radius, Vec2(0.0, 0.0), true};
  return {dist - d.radius, diff / dist, false};
}

inline GapGrad piece_gap(const Vec2& p, const Piece& piece) {
  return std::visit(
      [&](const auto& shape) -> GapGrad {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, Segment>) return segment_gap(p, shape);
        if constexpr (std::is_same_v<T, Rect>) return rect_gap(p, shape);
        if constexpr (std::is_same_v<T, Disk>) return disk_gap(p, shape);
      },
      piece);
}

// Nearest piece wins; strict comparison keeps the lowest-index piece on ties.
inline GapGrad obstacle_gap(const Vec2& p, const Obstacle& obs) {
  GapGrad best{std::numeric_limits<double>::infinity(), Vec2(0, 0), false};
  for (const Piece& piece : obs.pieces) {
    GapGrad g = piece_gap(p, piece);
    if (g.gap < best.gap) best = g;
  }
  return best;
}

}  // namespace detail

enum class ContactKind : std::uint8_t { AgentAgent, AgentObstacle };

struct ContactIndexEntry {
  ContactKind kind;
  int i;  // agent index
  int j;  // second agent, or obstacle entity index
};

// Row map for the fixed lexicographic ordering.
inline std::vector<ContactIndexEntry> contact_index(const Scenario& s) {
  std::vector<ContactIndexEntry> map;
  map.reserve(static_cast<std::size_t>(s.n_contacts()));
  for (int i = 0; i < s.n_agents; ++i)
    for (int j = i + 1; j < s.n_agents; ++j)
      map.push_back({ContactKind::AgentAgent, i, j});
  const int n_obs = s.n_obstacle_entities();
  for (int i = 0; i < s.n_agents; ++i)
    for (int k = 0; k < n_obs; ++k)
      map.push_back({ContactKind::AgentObstacle, i, k});
  return map;
}

// Gap and gradient of one contact row. The gradient has at most four nonzero
// entries, returned as (flat coordinate index, value) pairs.
struct ContactRow {
  double gap = 0.0;
  int nnz = 0;
  int idx[4] = {0, 0, 0, 0};
  double val[4] = {0, 0, 0, 0};
};

namespace detail {

inline void check_dims(const Vec& q, const Scenario& s) {
  if (q.size() != 2 * s.n_agents)
    throw DimensionError("configuration has wrong length for scenario");
}

inline ContactRow eval_row(const Vec& q, const Scenario& s,
                           const ContactIndexEntry& e,
                           const std::vector<Obstacle>& obstacles) {
  ContactRow row;
  if (e.kind == ContactKind::AgentAgent) {
    const Vec2 qi(q[2 * e.i], q[2 * e.i + 1]);
    const Vec2 qj(q[2 * e.j], q[2 * e.j + 1]);
    const Vec2 diff = qi - qj;
    const double dist = diff.norm();
    if (dist == 0.0)
      throw DegenerateGeometryError("coincident agent centers " +
                                    std::to_string(e.i) + "," + std::to_string(e.j));
    row.gap = dist - 2.0 * s.agent_radius;
    const Vec2 n = diff / dist;
    row.nnz = 4;
    row.idx[0] = 2 * e.i;
    row.idx[1] = 2 * e.i + 1;
    row.idx[2] = 2 * e.j;
    row.idx[3] = 2 * e.j + 1;
    row.val[0] = n.x();
    row.val[1] = n.y();
    row.val[2] = -n.x();
    row.val[3] = -n.y();
  } else {
    const Vec2 qi(q[2 * e.i], q[2 * e.i + 1]);
    const GapGrad g = obstacle_gap(qi, obstacles[static_cast<std::size_t>(e.j)]);
    if (g.degenerate)
      throw DegenerateGeometryError("agent " + std::to_string(e.i) +
                                    " center on obstacle feature");
    row.gap = s.subtract_radius_for_obstacles ? g.gap - s.agent_radius : g.gap;
    row.nnz = 2;
    row.idx[0] = 2 * e.i;
    row.idx[1] = 2 * e.i + 1;
    row.val[0] = g.dir.x();
    row.val[1] = g.dir.y();
  }
  return row;
}

}  // namespace detail

// Gap vector D(q).
inline Vec contact_distances(const Vec& q, const Scenario& s) {
  detail::check_dims(q, s);
  const auto map = contact_index(s);
  const auto obstacles = s.obstacles();
  Vec d(static_cast<Index>(map.size()));
  for (std::size_t l = 0; l < map.size(); ++l)
    d[static_cast<Index>(l)] = detail::eval_row(q, s, map[l], obstacles).gap;
  return d;
}

// Jacobian G(q); row l is the gradient of D_l. Agent-agent rows keep all
// four structural entries even when a component vanishes.
inline SpMat contact_jacobian(const Vec& q, const Scenario& s) {
  detail::check_dims(q, s);
  const auto map = contact_index(s);
  const auto obstacles = s.obstacles();
  SpMat G(static_cast<Index>(map.size()), q.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(map.size() * 4);
  for (std::size_t l = 0; l < map.size(); ++l) {
    const ContactRow row = detail::eval_row(q, s, map[l], obstacles);
    for (int m = 0; m < row.nnz; ++m)
      trips.emplace_back(static_cast<int>(l), row.idx[m], row.val[m]);
  }
  G.setFromTriplets(trips.begin(), trips.end());
  return G;
}

struct ContactSystem {
  Vec d;      // gaps
  SpMat B;    // -h G(q)
  double h = 0.0;
  std::vector<ContactIndexEntry> index;

  Index rows() const { return d.size(); }
};

inline ContactSystem assemble_contact_system(const Vec& q, const Scenario& s,
                                             double h) {
  detail::check_dims(q, s);
  ContactSystem sys;
  sys.h = h;
  sys.index = contact_index(s);
  const auto obstacles = s.obstacles();
  const Index m = static_cast<Index>(sys.index.size());
  sys.d.resize(m);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(sys.index.size() * 4);
  for (Index l = 0; l < m; ++l) {
    const ContactRow row =
        detail::eval_row(q, s, sys.index[static_cast<std::size_t>(l)], obstacles);
    sys.d[l] = row.gap;
    for (int k = 0; k < row.nnz; ++k)
      trips.emplace_back(static_cast<int>(l), row.idx[k], -h * row.val[k]);
  }
  sys.B.resize(m, q.size());
  sys.B.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

inline double min_gap(const Vec& q, const Scenario& s) {
  return contact_distances(q, s).minCoeff();
}

// Row-targeted evaluation: gap and B-row entries of a single contact, used
// by the hyper-reduced online phase so only selected rows are assembled.
inline ContactRow contact_row(const Vec& q, const Scenario& s, Index l,
                              const std::vector<ContactIndexEntry>& map,
                              const std::vector<Obstacle>& obstacles,
                              double h) {
  ContactRow row = detail::eval_row(q, s, map[static_cast<std::size_t>(l)], obstacles);
  for (int k = 0; k < row.nnz; ++k) row.val[k] *= -h;
  return row;
}

}  // namespace vimor::geom
