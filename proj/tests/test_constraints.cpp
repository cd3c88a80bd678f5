#include <doctest.h>

#include "oracles.hpp"
#include "support.hpp"
#include "topo/constraints.hpp"

using namespace topo;

namespace {

std::vector<unsigned> ids(const ClassSet& s) { return class_ids(s); }

}  // namespace

TEST_SUITE("constraints") {
  TEST_CASE("containment with three classes forbids only background") {
    const ConstraintSet cs(3, {Constraint::containment(1, 2)});
    const auto tasks = reduce(cs, Connectivity::Four, 2);
    REQUIRE(tasks.size() == 1);
    CHECK(ids(tasks[0].ids_a) == std::vector<unsigned>{1});
    CHECK(ids(tasks[0].ids_c) == std::vector<unsigned>{0});
  }

  TEST_CASE("exclusion maps directly") {
    const ConstraintSet cs(4, {Constraint::exclusion(1, 3)});
    const auto tasks = reduce(cs, Connectivity::Eight, 2);
    CHECK(ids(tasks[0].ids_a) == std::vector<unsigned>{1});
    CHECK(ids(tasks[0].ids_c) == std::vector<unsigned>{3});
  }

  TEST_CASE("containment with five classes forbids the complement") {
    const ConstraintSet cs(5, {Constraint::containment(1, 2)});
    const auto t = reduce(cs, Connectivity::Box, 3)[0];
    std::vector<unsigned> expect;
    for (unsigned id = 0; id < 5; ++id)
      if (id != 1 && id != 2) expect.push_back(id);
    CHECK(ids(t.ids_c) == expect);
  }

  TEST_CASE("reduced tasks partition the classes") {
    testing::Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const unsigned c = static_cast<unsigned>(testing::uniform(rng, 3, 8));
      const auto cs = testing::random_constraints(rng, c, 3);
      const auto tasks = reduce(cs, Connectivity::Box, 2);
      REQUIRE(tasks.size() == cs.constraints().size());
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        CHECK((tasks[i].ids_a & tasks[i].ids_c).none());
        const auto& k = cs.constraints()[i];
        CHECK(tasks[i].width == k.width);
        if (k.kind == ConstraintKind::Containment) {
          ClassSet all = tasks[i].ids_a | tasks[i].ids_c;
          all.set(k.second);
          CHECK(all.count() == c);
        }
      }
    }
  }

  TEST_CASE("named kernels") {
    const auto four = build_kernel(2, Connectivity::Four);
    const std::vector<Coord> cross{{0, -1, 0}, {0, 0, -1}, {0, 0, 1}, {0, 1, 0}};
    CHECK(four.neighbor_offsets() == cross);
    CHECK(build_kernel(2, Connectivity::Eight).neighbor_offsets().size() == 8);
    CHECK(build_kernel(3, Connectivity::Six).neighbor_offsets().size() == 6);
    const auto full = build_kernel(3, Connectivity::TwentySix);
    CHECK(full.popcount() == 27);
    const auto box = build_kernel(2, Connectivity::Box, 2);
    CHECK(box.extent() == 5);
    CHECK(box.popcount() == 25);
  }

  TEST_CASE("kernel weights match the neighborhood definition") {
    struct Case {
      std::size_t ndim;
      Connectivity conn;
      unsigned width;
    };
    const Case cases[] = {{2, Connectivity::Four, 1}, {2, Connectivity::Eight, 1}, {2, Connectivity::Box, 3},
                          {3, Connectivity::Six, 1},  {3, Connectivity::TwentySix, 1}, {3, Connectivity::Box, 2}};
    for (const auto& c : cases) {
      const auto k = build_kernel(c.ndim, c.conn, c.width);
      const auto r = static_cast<std::ptrdiff_t>(c.width);
      for (std::ptrdiff_t z = -r; z <= r; ++z)
        for (std::ptrdiff_t y = -r; y <= r; ++y)
          for (std::ptrdiff_t x = -r; x <= r; ++x) {
            const Coord o{z, y, x};
            if (o == Coord{0, 0, 0}) continue;
            CHECK(k.weight(o) == oracle::in_neighborhood(c.ndim, c.conn, c.width, o));
          }
    }
  }

  TEST_CASE("kernels are reflection-symmetric") {
    for (auto conn : {Connectivity::Four, Connectivity::Eight, Connectivity::Box})
      for (const auto& o : build_kernel(2, conn).support()) CHECK(build_kernel(2, conn).weight({-o[0], -o[1], -o[2]}));
    CHECK_THROWS_AS(ConnectivityKernel(2, 3, {0, 1, 0, 0, 0, 0, 0, 0, 0}), Error);
    CHECK_THROWS_AS(ConnectivityKernel(2, 4, std::vector<std::uint8_t>(16, 1)), Error);
    CHECK_THROWS_AS(ConnectivityKernel(2, 3, {0, 0, 0, 0, 1, 0, 0, 0, 0}), Error);
  }

  TEST_CASE("connectivity must match the dimension") {
    CHECK_THROWS_AS(build_kernel(3, Connectivity::Four), Error);
    CHECK_THROWS_AS(build_kernel(2, Connectivity::TwentySix), Error);
    CHECK_THROWS_AS(build_kernel(2, Connectivity::Eight, 2), Error);
    CHECK_THROWS_AS(parse_connectivity("5"), Error);
    CHECK(parse_connectivity("26") == Connectivity::TwentySix);
  }

  TEST_CASE("wide constraints fall back to the box kernel") {
    const ConstraintSet cs(3, {Constraint::exclusion(1, 2, 2)});
    const auto t = reduce(cs, Connectivity::Four, 2)[0];
    CHECK(t.kernel == build_kernel(2, Connectivity::Box, 2));
  }

  TEST_CASE("inconsistent constraint sets are rejected") {
    CHECK_THROWS_AS(ConstraintSet(3, {Constraint::exclusion(1, 3)}), Error);
    CHECK_THROWS_AS(ConstraintSet(3, {Constraint::exclusion(1, 1)}), Error);
    CHECK_THROWS_AS(ConstraintSet(3, {Constraint::exclusion(1, 2, 0)}), Error);
    CHECK_THROWS_AS(ConstraintSet(2, {Constraint::containment(1, 0)}), Error);
    CHECK_THROWS_AS(ConstraintSet(4, {Constraint::containment(1, 2), Constraint::containment(1, 3)}), Error);
    CHECK_THROWS_AS(ConstraintSet(4, {Constraint::containment(1, 2), Constraint::containment(2, 1)}), Error);
    CHECK_THROWS_AS(ConstraintSet(4, {Constraint::containment(1, 2), Constraint::exclusion(2, 1)}), Error);
    CHECK_NOTHROW(ConstraintSet(4, {Constraint::containment(1, 2), Constraint::containment(2, 3)}));
    CHECK_NOTHROW(ConstraintSet(4, {Constraint::containment(1, 2), Constraint::containment(1, 2, 2)}));
    CHECK_NOTHROW(ConstraintSet(4, {Constraint::containment(1, 2), Constraint::exclusion(1, 3)}));
  }

  TEST_CASE("config text round trip") {
    const char* text =
        "# aorta\n"
        "classes 4\n"
        "contain 1 in 2 d=2   # wall\n"
        "exclude 1 3\n"
        "conn 8\n";
    const auto cfg = parse_constraint_config(text);
    CHECK(cfg.constraints.num_classes() == 4);
    CHECK(cfg.conn == Connectivity::Eight);
    REQUIRE(cfg.constraints.constraints().size() == 2);
    CHECK(cfg.constraints.constraints()[0] == Constraint::containment(1, 2, 2));
    CHECK(cfg.constraints.constraints()[1] == Constraint::exclusion(1, 3));
    const auto again = parse_constraint_config(format_constraint_config(cfg));
    CHECK(again.constraints == cfg.constraints);
    CHECK(again.conn == cfg.conn);
  }

  TEST_CASE("config errors name the line") {
    auto message = [](const char* text) {
      try {
        parse_constraint_config(text);
      } catch (const Error& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message("classes 3\nfrobnicate 1\n").find("line 2") != std::string::npos);
    CHECK(message("classes 3\ncontain 1 2\n").find("line 2") != std::string::npos);
    CHECK(message("classes 3\nexclude 1 2 d=0\n").find("line 2") != std::string::npos);
    CHECK(message("exclude 1 2\n").find("classes") != std::string::npos);
    CHECK(message("classes 3\nconn 7\n").find("line 2") != std::string::npos);
  }
}
