#include <catch_amalgamated.hpp>

#include "vimor/fom.hpp"
#include "vimor/geometry.hpp"

using namespace vimor;
using geom::Scenario;

namespace {

Scenario two_agent_scenario(double radius) {
  Scenario s;
  s.n_agents = 2;
  s.agent_radius = radius;
  s.include_exit_barrier = false;
  s.hall_width = 20.0;
  s.hall_height = 20.0;
  return s;
}

Vec make_q(std::initializer_list<double> vals) {
  Vec q(static_cast<Index>(vals.size()));
  Index i = 0;
  for (double v : vals) q[i++] = v;
  return q;
}

// Independent point-segment distance: dense sampling refined around the
// closest parameter value.
double segment_distance_oracle(const Vec2& p, const Vec2& a, const Vec2& b) {
  double best = std::numeric_limits<double>::infinity();
  double tb = 0.0;
  const int n = 2000;
  for (int k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    const double dist = (p - (a + t * (b - a))).norm();
    if (dist < best) {
      best = dist;
      tb = t;
    }
  }
  double lo = std::max(0.0, tb - 1.0 / n), hi = std::min(1.0, tb + 1.0 / n);
  for (int it = 0; it < 200; ++it) {
    const double t1 = lo + (hi - lo) / 3, t2 = hi - (hi - lo) / 3;
    const double d1 = (p - (a + t1 * (b - a))).norm();
    const double d2 = (p - (a + t2 * (b - a))).norm();
    if (d1 < d2)
      hi = t2;
    else
      lo = t1;
  }
  const double t = 0.5 * (lo + hi);
  return (p - (a + t * (b - a))).norm();
}

}  // namespace

TEST_CASE("contact distances for agent pairs", "[geometry]") {
  Scenario s = two_agent_scenario(1.0);
  SECTION("separated pair") {
    const Vec d = geom::contact_distances(make_q({0, 0, 3, 0}), s);
    REQUIRE(d.size() == 1);
    REQUIRE(d[0] == Catch::Approx(1.0));
  }
  SECTION("touching pair") {
    const Vec d = geom::contact_distances(make_q({0, 0, 2, 0}), s);
    REQUIRE(d[0] == Catch::Approx(0.0).margin(1e-15));
  }
  SECTION("coincident centers raise") {
    REQUIRE_THROWS_AS(geom::contact_distances(make_q({1, 1, 1, 1}), s),
                      DegenerateGeometryError);
  }
  SECTION("dimension mismatch raises") {
    REQUIRE_THROWS_AS(geom::contact_distances(make_q({0, 0, 3}), s),
                      DimensionError);
  }
}

TEST_CASE("contact distance to a segment obstacle", "[geometry]") {
  Scenario s;
  s.n_agents = 1;
  s.agent_radius = 0.5;
  s.include_exit_barrier = false;
  s.hall_width = 20.0;
  s.hall_height = 20.0;
  geom::Obstacle wall;
  wall.pieces.push_back(geom::Segment{Vec2(-5, 0), Vec2(5, 0)});
  s.extra_obstacles.push_back(wall);

  const Vec2 p(0.0, 2.0);
  const double oracle = segment_distance_oracle(p, Vec2(-5, 0), Vec2(5, 0));
  REQUIRE(oracle == Catch::Approx(2.0).epsilon(1e-9));

  const Vec d = geom::contact_distances(make_q({0, 2}), s);
  REQUIRE(d.size() == 1);
  REQUIRE(d[0] == Catch::Approx(oracle - 0.5).epsilon(1e-12));

  SECTION("literal mode keeps the raw distance") {
    s.subtract_radius_for_obstacles = false;
    const Vec d2 = geom::contact_distances(make_q({0, 2}), s);
    REQUIRE(d2[0] == Catch::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("contact jacobian rows", "[geometry]") {
  SECTION("unit separation axis") {
    Scenario s = two_agent_scenario(1.0);
    const SpMat G = geom::contact_jacobian(make_q({0, 0, 3, 0}), s);
    const Mat Gd = Mat(G);
    REQUIRE(Gd(0, 0) == Catch::Approx(-1.0));
    REQUIRE(Gd(0, 1) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(Gd(0, 2) == Catch::Approx(1.0));
    REQUIRE(Gd(0, 3) == Catch::Approx(0.0).margin(1e-15));
  }
  SECTION("obstacle row is the outward unit vector") {
    Scenario s;
    s.n_agents = 1;
    s.agent_radius = 0.5;
    s.include_exit_barrier = false;
    s.hall_width = 20.0;
    s.hall_height = 20.0;
    geom::Obstacle wall;
    wall.pieces.push_back(geom::Segment{Vec2(-5, 0), Vec2(5, 0)});
    s.extra_obstacles.push_back(wall);
    const Mat Gd = Mat(geom::contact_jacobian(make_q({0, 2}), s));
    REQUIRE(Gd(0, 0) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(Gd(0, 1) == Catch::Approx(1.0));
  }
}

TEST_CASE("jacobian matches finite differences of the gap vector", "[geometry]") {
  Scenario s;
  s.n_agents = 4;
  s.agent_radius = 0.1;
  s.hall_width = 6.0;
  s.hall_height = 2.0;
  s.exit_width = 2.0;
  geom::Obstacle disk;
  disk.pieces.push_back(geom::Disk{Vec2(3.0, 1.0), 0.3});
  s.extra_obstacles.push_back(disk);

  Rng rng(1234);
  int tested = 0;
  for (int trial = 0; trial < 40 && tested < 10; ++trial) {
    Vec q(8);
    for (Index i = 0; i < 8; ++i)
      q[i] = (i % 2 == 0) ? rng.uniform(0.3, 5.7) : rng.uniform(0.3, 1.7);
    if (geom::min_gap(q, s) <= 1e-3) continue;
    ++tested;
    const Mat G = Mat(geom::contact_jacobian(q, s));
    const double step = 1e-6;
    for (Index c = 0; c < q.size(); ++c) {
      Vec qp = q, qm = q;
      qp[c] += step;
      qm[c] -= step;
      const Vec fd =
          (geom::contact_distances(qp, s) - geom::contact_distances(qm, s)) /
          (2 * step);
      for (Index r = 0; r < fd.size(); ++r)
        REQUIRE(std::abs(G(r, c) - fd[r]) <= 1e-6);
    }
  }
  REQUIRE(tested >= 5);
}

TEST_CASE("contact system assembly", "[geometry]") {
  SECTION("row-count identity for the desk scenario") {
    Scenario s;  // defaults: 20 agents, exit barrier
    const Vec q0 = fom::initialize_positions(s, 7);
    const auto sys = geom::assemble_contact_system(q0, s, s.time_step);
    REQUIRE(sys.rows() == 20 * 19 / 2 + 20 * s.n_obstacle_entities());
    REQUIRE(sys.rows() == s.n_contacts());
  }
  SECTION("B equals -hG") {
    Scenario s = two_agent_scenario(1.0);
    const Vec q = make_q({0, 0, 3, 0});
    const auto sys = geom::assemble_contact_system(q, s, 0.01);
    const Mat Bd = Mat(sys.B);
    REQUIRE(Bd(0, 0) == Catch::Approx(0.01));
    REQUIRE(Bd(0, 2) == Catch::Approx(-0.01));
    REQUIRE(sys.d[0] == Catch::Approx(1.0));
  }
  SECTION("h = 0 gives a zero matrix") {
    Scenario s = two_agent_scenario(1.0);
    const auto sys = geom::assemble_contact_system(make_q({0, 0, 3, 0}), s, 0.0);
    REQUIRE(Mat(sys.B).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("min gap", "[geometry]") {
  Scenario s = two_agent_scenario(1.0);
  REQUIRE(geom::min_gap(make_q({0, 0, 2, 0}), s) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(geom::min_gap(make_q({0, 0, 3, 0}), s) > 0.0);
  REQUIRE(geom::min_gap(make_q({0, 0, 1.9, 0}), s) == Catch::Approx(-0.1));
}

TEST_CASE("agent-agent rows have norm sqrt(2) and four structural entries",
          "[geometry]") {
  Scenario s;
  s.n_agents = 5;
  s.agent_radius = 0.1;
  Rng rng(99);
  Vec q(10);
  for (Index i = 0; i < 10; ++i)
    q[i] = (i % 2 == 0) ? rng.uniform(0.5, 5.5) : rng.uniform(0.3, 1.7);
  const SpMat G = geom::contact_jacobian(q, s);
  const auto map = geom::contact_index(s);
  for (std::size_t l = 0; l < map.size(); ++l) {
    if (map[l].kind != geom::ContactKind::AgentAgent) continue;
    int nnz = 0;
    double norm2 = 0.0;
    for (SpMat::InnerIterator it(G, static_cast<Index>(l)); it; ++it) {
      ++nnz;
      norm2 += it.value() * it.value();
    }
    REQUIRE(nnz == 4);
    REQUIRE(std::sqrt(norm2) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("translation invariance of agent-agent rows", "[geometry]") {
  Scenario s;
  s.n_agents = 4;
  s.agent_radius = 0.1;
  Rng rng(4321);
  Vec q(8);
  for (Index i = 0; i < 8; ++i)
    q[i] = (i % 2 == 0) ? rng.uniform(1.0, 5.0) : rng.uniform(0.3, 1.7);
  Vec shifted = q;
  for (int i = 0; i < 4; ++i) {
    shifted[2 * i] += 0.173;
    shifted[2 * i + 1] -= 0.051;
  }
  const Vec d0 = geom::contact_distances(q, s);
  const Vec d1 = geom::contact_distances(shifted, s);
  const Mat G0 = Mat(geom::contact_jacobian(q, s));
  const Mat G1 = Mat(geom::contact_jacobian(shifted, s));
  const auto map = geom::contact_index(s);
  for (std::size_t l = 0; l < map.size(); ++l) {
    if (map[l].kind != geom::ContactKind::AgentAgent) continue;
    const Index r = static_cast<Index>(l);
    REQUIRE(d0[r] == Catch::Approx(d1[r]).epsilon(1e-12));
    REQUIRE((G0.row(r) - G1.row(r)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("rectangle and disk obstacle gaps", "[geometry]") {
  Scenario s;
  s.n_agents = 1;
  s.agent_radius = 0.1;
  s.include_exit_barrier = false;
  s.hall_width = 20.0;
  s.hall_height = 20.0;
  s.subtract_radius_for_obstacles = false;
  geom::Obstacle rect;
  rect.pieces.push_back(geom::Rect{1.0, 1.0, 3.0, 2.0});
  geom::Obstacle disk;
  disk.pieces.push_back(geom::Disk{Vec2(6.0, 6.0), 0.5});
  s.extra_obstacles.push_back(rect);
  s.extra_obstacles.push_back(disk);

  SECTION("outside a rectangle corner") {
    const Vec d = geom::contact_distances(make_q({4.0, 3.0}), s);
    REQUIRE(d[0] == Catch::Approx(std::sqrt(2.0)));
  }
  SECTION("outside a rectangle edge") {
    const Vec d = geom::contact_distances(make_q({2.0, 0.5}), s);
    REQUIRE(d[0] == Catch::Approx(0.5));
  }
  SECTION("disk gap is signed") {
    const Vec d = geom::contact_distances(make_q({6.0, 6.8}), s);
    REQUIRE(d[1] == Catch::Approx(0.3));
    const Vec din = geom::contact_distances(make_q({6.0, 6.3}), s);
    REQUIRE(din[1] == Catch::Approx(-0.2));
  }
}

TEST_CASE("barrier entity uses the nearest wall piece", "[geometry]") {
  Scenario s;
  s.n_agents = 1;
  s.agent_radius = 0.1;
  s.hall_width = 6.0;
  s.hall_height = 2.0;
  s.exit_width = 2.0;  // walls on [0,2] and [4,6] at y = 2
  s.subtract_radius_for_obstacles = false;

  REQUIRE(s.n_obstacle_entities() == 1);
  const Vec dl = geom::contact_distances(make_q({1.0, 1.5}), s);
  REQUIRE(dl[0] == Catch::Approx(0.5));
  const Vec dr = geom::contact_distances(make_q({5.0, 1.0}), s);
  REQUIRE(dr[0] == Catch::Approx(1.0));
  // Under the exit center both pieces are equidistant; gap via inner corners.
  const Vec dm = geom::contact_distances(make_q({3.0, 1.0}), s);
  REQUIRE(dm[0] == Catch::Approx(std::sqrt(2.0)));
}
