#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "generators.hpp"
#include "slr/errors.hpp"
#include "slr/master.hpp"
#include "slr/model.hpp"
#include "slr/oracles.hpp"

using namespace slr;

namespace {

// min y  s.t.  y == x0^2 on x0 in [0, 2], y in [-1, 5], plus one binary.
LipschitzMinlp square_problem() {
  LipschitzMinlp p;
  p.variables = {{"x0", 0.0, 2.0, false},
                 {"y", -1.0, 5.0, false},
                 {"b", 0.0, 1.0, true}};
  p.objective = {0.0, 1.0, 0.0};
  NonlinearityBinding b;
  b.name = "f";
  b.inputs = {0};
  b.output = 1;
  b.lipschitz = 4.0;
  b.norm.weights = {1.0};
  b.oracle = make_polynomial_oracle({1.0}, {{2}});
  p.bindings.push_back(std::move(b));
  return p;
}

BoxPartition partition_from_boxes(const LipschitzMinlp& p, int binding,
                                  const std::vector<Box>& boxes) {
  BoxPartition part;
  part.root = p.input_box(binding);
  for (const auto& box : boxes) {
    PartitionEntry e;
    e.box = box;
    e.norm = p.bindings[binding].effective_norm(box);
    e.omega = make_omega(box, e.norm, evaluate(p, binding, center(box)));
    part.entries.push_back(std::move(e));
  }
  return part;
}

// Splits the root at random strictly-interior points `rounds` times.
std::vector<Box> random_subdivision(testgen::Rng& rng, const Box& root,
                                    int rounds) {
  std::vector<Box> boxes{root};
  for (int r = 0; r < rounds; ++r) {
    const int pick = testgen::irand(rng, 0, static_cast<int>(boxes.size()) - 1);
    const Box target = boxes[pick];
    std::vector<double> at(target.dim());
    for (int c = 0; c < target.dim(); ++c)
      at[c] = target.lo[c] +
              testgen::urand(rng, 0.2, 0.8) * (target.hi[c] - target.lo[c]);
    auto children = split(target, at);
    if (children.empty()) continue;
    boxes.erase(boxes.begin() + pick);
    boxes.insert(boxes.end(), children.begin(), children.end());
  }
  return boxes;
}

}  // namespace

TEST_SUITE("master") {

TEST_CASE("activation constants for a two-box partition") {
  const auto p = square_problem();
  const auto part =
      partition_from_boxes(p, 0, {Box{{0.0}, {1.0}}, Box{{1.0}, {2.0}}});

  CHECK(part.entries[0].omega.value_at_center == doctest::Approx(0.25));
  CHECK(part.entries[0].omega.radius == doctest::Approx(2.0));
  CHECK(part.entries[1].omega.y_lower() == doctest::Approx(0.25));
  CHECK(part.entries[1].omega.y_upper() == doctest::Approx(4.25));

  const BigMValues m = compute_big_m(p, 0, part);
  CHECK(m.x_rows == doctest::Approx(2.0));
  // value spread [-1.75, 5] plus the largest radius
  CHECK(m.y_rows == doctest::Approx(8.75));
}

TEST_CASE("override replaces both activation constants") {
  auto p = square_problem();
  p.bindings[0].big_m_override = 123.0;
  const auto part = partition_from_boxes(p, 0, {Box{{0.0}, {2.0}}});
  const BigMValues m = compute_big_m(p, 0, part);
  CHECK(m.x_rows == doctest::Approx(123.0));
  CHECK(m.y_rows == doctest::Approx(123.0));
}

TEST_CASE("inactive entries do not widen the constants") {
  const auto p = square_problem();
  auto part =
      partition_from_boxes(p, 0, {Box{{0.0}, {1.0}}, Box{{1.0}, {2.0}}});
  PartitionEntry wide;
  wide.box = Box{{-50.0}, {50.0}};
  wide.norm = p.bindings[0].effective_norm(wide.box);
  wide.omega = make_omega(wide.box, wide.norm, 0.0);
  wide.active = false;
  part.entries.push_back(wide);
  const BigMValues m = compute_big_m(p, 0, part);
  CHECK(m.x_rows == doctest::Approx(2.0));
  CHECK(m.y_rows == doctest::Approx(8.75));
}

TEST_CASE("integral flags mark exactly the integral and selector columns") {
  // Regression: the flag vector must be positional, sized to the full
  // column count, never a list of indices.
  const auto p = square_problem();
  auto part =
      partition_from_boxes(p, 0, {Box{{0.0}, {1.0}}, Box{{1.0}, {2.0}}});
  const auto master = build_master(p, {part});

  REQUIRE(static_cast<int>(master.milp.integral.size()) ==
          master.milp.lp.ncols);
  CHECK(master.milp.lp.ncols == 5);
  CHECK(master.milp.integral[0] == 0);  // x0 continuous
  CHECK(master.milp.integral[1] == 0);  // y continuous
  CHECK(master.milp.integral[2] == 1);  // declared binary
  CHECK(master.milp.integral[3] == 1);  // selector
  CHECK(master.milp.integral[4] == 1);  // selector
  const int flagged = std::accumulate(master.milp.integral.begin(),
                                      master.milp.integral.end(), 0);
  CHECK(flagged == 3);
}

TEST_CASE("relaxation layout") {
  auto p = square_problem();
  p.linear.add_row({1.0, 1.0, 0.0}, 0.0);
  auto part =
      partition_from_boxes(p, 0, {Box{{0.0}, {1.0}}, Box{{1.0}, {2.0}}});
  PartitionEntry dead = part.entries[0];
  dead.active = false;
  part.entries.push_back(dead);

  const auto master = build_master(p, {part});
  const auto& lp = master.milp.lp;

  CHECK(master.n_problem_vars == 3);
  CHECK(lp.ncols == 5);
  // 1 problem row + convexity + 2 active entries * (2 input + 2 value rows)
  CHECK(lp.nrows == 10);
  REQUIRE(master.z_col.size() == 1);
  CHECK(master.z_col[0] == std::vector<int>{3, 4, -1});
  REQUIRE(master.col_names.size() == 5);
  CHECK(master.col_names[0] == "x0");
  CHECK(master.col_names[3] == "z_f_0");
  CHECK(master.col_names[4] == "z_f_1");

  // Problem row carried over as >=.
  CHECK(lp.get(0, 0) == doctest::Approx(1.0));
  CHECK(lp.get(0, 1) == doctest::Approx(1.0));
  CHECK(lp.row_lo[0] == doctest::Approx(0.0));
  CHECK(std::isinf(lp.row_hi[0]));

  // Selector convexity.
  CHECK(lp.row_lo[1] == doctest::Approx(1.0));
  CHECK(lp.row_hi[1] == doctest::Approx(1.0));
  CHECK(lp.get(1, 3) == doctest::Approx(1.0));
  CHECK(lp.get(1, 4) == doctest::Approx(1.0));
  CHECK(lp.col_lo[3] == doctest::Approx(0.0));
  CHECK(lp.col_hi[3] == doctest::Approx(1.0));

  // Entry 0 activation rows: input window then value window.
  CHECK(lp.get(2, 0) == doctest::Approx(1.0));
  CHECK(lp.get(2, 3) == doctest::Approx(-2.0));
  CHECK(lp.row_lo[2] == doctest::Approx(0.0 - 2.0));
  CHECK(lp.get(3, 3) == doctest::Approx(2.0));
  CHECK(lp.row_hi[3] == doctest::Approx(1.0 + 2.0));
  CHECK(lp.get(4, 1) == doctest::Approx(1.0));
  CHECK(lp.get(4, 3) == doctest::Approx(-8.75));
  CHECK(lp.row_lo[4] == doctest::Approx(-1.75 - 8.75));
  CHECK(lp.row_hi[5] == doctest::Approx(2.25 + 8.75));

  // Entry 1 value rows sit after its input rows.
  CHECK(lp.row_lo[8] == doctest::Approx(0.25 - 8.75));
  CHECK(lp.row_hi[9] == doctest::Approx(4.25 + 8.75));
}

TEST_CASE("partition count must match binding count") {
  const auto p = square_problem();
  CHECK_THROWS_AS(build_master(p, {}), ValidationError);
}

TEST_CASE("solving the relaxation tracks the tightest value interval") {
  const auto p = square_problem();
  milp::MilpConfig cfg;

  const auto coarse =
      partition_from_boxes(p, 0, {Box{{0.0}, {1.0}}, Box{{1.0}, {2.0}}});
  const auto m1 = build_master(p, {coarse});
  const auto s1 = milp::solve_milp(m1.milp, cfg);
  REQUIRE(s1.status == milp::MilpStatus::Optimal);
  // Column bound y >= -1 binds before the box interval [-1.75, 2.25].
  CHECK(s1.objective == doctest::Approx(-1.0));
  const auto pt1 = extract(m1, s1, p, {coarse});
  CHECK(pt1.chosen_box[0] == 0);

  const auto fine = partition_from_boxes(
      p, 0, {Box{{0.0}, {0.5}}, Box{{0.5}, {1.0}}, Box{{1.0}, {2.0}}});
  const auto m2 = build_master(p, {fine});
  const auto s2 = milp::solve_milp(m2.milp, cfg);
  REQUIRE(s2.status == milp::MilpStatus::Optimal);
  CHECK(s2.objective == doctest::Approx(0.0625 - 1.0));
  CHECK(s2.objective >= s1.objective);
  const auto pt2 = extract(m2, s2, p, {fine});
  CHECK(pt2.chosen_box[0] == 0);
  CHECK(fine.entries[0].box.contains(std::vector<double>{pt2.x[0]}, 1e-7));
}

TEST_CASE("extraction cross-checks the selector against the point") {
  const auto p = square_problem();
  const auto part =
      partition_from_boxes(p, 0, {Box{{0.0}, {1.0}}, Box{{1.0}, {2.0}}});
  const auto master = build_master(p, {part});

  milp::MilpSolution sol;
  sol.status = milp::MilpStatus::Optimal;
  sol.x = {1.8, 3.24, 0.0, 1.0, 0.0};  // selector says box 0, x sits in box 1
  auto pt = extract(master, sol, p, {part});
  CHECK(pt.chosen_box[0] == 1);

  sol.x = {0.3, 0.09, 0.0, 1.0, 0.0};
  pt = extract(master, sol, p, {part});
  CHECK(pt.chosen_box[0] == 0);
}

TEST_CASE("randomized structural invariants") {
  testgen::Rng rng(20231107);
  for (int it = 0; it < 60; ++it) {
    auto problem =
        testgen::random_instance(rng, testgen::irand(rng, 1, 2), 2,
                                 testgen::irand(rng, 0, 1) == 1);
    REQUIRE(validate(problem).empty());

    std::vector<BoxPartition> partitions;
    for (size_t i = 0; i < problem.bindings.size(); ++i) {
      const Box root = problem.input_box(static_cast<int>(i));
      auto boxes =
          random_subdivision(rng, root, testgen::irand(rng, 0, 3));
      auto part =
          partition_from_boxes(problem, static_cast<int>(i), boxes);
      if (!part.entries.empty() && testgen::irand(rng, 0, 3) == 0)
        part.entries[testgen::irand(
                         rng, 0, static_cast<int>(part.entries.size()) - 1)]
            .active = false;
      std::string why;
      REQUIRE_MESSAGE(verify_cover(part, &why), why);
      partitions.push_back(std::move(part));
    }

    const auto master = build_master(problem, partitions);
    const auto& lp = master.milp.lp;

    int active_total = 0;
    int act_rows = 0;
    for (size_t i = 0; i < partitions.size(); ++i) {
      const int a = partitions[i].active_count();
      active_total += a;
      act_rows +=
          a * (2 * static_cast<int>(problem.bindings[i].inputs.size()) + 2) +
          1;
    }
    CHECK(lp.ncols == problem.nvars() + active_total);
    CHECK(lp.nrows == problem.linear.nrows() + act_rows);
    REQUIRE(static_cast<int>(master.milp.integral.size()) == lp.ncols);

    int flagged = 0;
    for (int j = 0; j < problem.nvars(); ++j) {
      CHECK(master.milp.integral[j] ==
            (problem.variables[j].integral ? 1 : 0));
      flagged += master.milp.integral[j];
    }
    for (int j = problem.nvars(); j < lp.ncols; ++j) {
      CHECK(master.milp.integral[j] == 1);
      ++flagged;
    }
    CHECK(flagged == std::accumulate(master.milp.integral.begin(),
                                     master.milp.integral.end(), 0));

    // z_col is -1 exactly on inactive entries and the activation constants
    // let a deselected box impose nothing over the hull of candidates.
    for (size_t i = 0; i < partitions.size(); ++i) {
      const Box root = problem.input_box(static_cast<int>(i));
      const auto& out =
          problem.variables[problem.bindings[i].output];
      const BigMValues m =
          compute_big_m(problem, static_cast<int>(i), partitions[i]);
      double y_min = out.lower, y_max = out.upper;
      for (const auto& e : partitions[i].entries) {
        if (!e.active) continue;
        y_min = std::min(y_min, e.omega.y_lower());
        y_max = std::max(y_max, e.omega.y_upper());
      }
      for (size_t j = 0; j < partitions[i].entries.size(); ++j) {
        const auto& e = partitions[i].entries[j];
        CHECK((master.z_col[i][j] >= 0) == e.active);
        if (!e.active) continue;
        for (int c = 0; c < e.box.dim(); ++c) {
          CHECK(e.box.lo[c] - m.x_rows <= root.lo[c] + 1e-12);
          CHECK(e.box.hi[c] + m.x_rows >= root.hi[c] - 1e-12);
        }
        CHECK(e.omega.y_lower() - m.y_rows <= y_min + 1e-9);
        CHECK(e.omega.y_upper() + m.y_rows >= y_max - 1e-9);
      }
    }
  }
}

}
