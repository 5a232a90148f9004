#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "covrl/rng.hpp"
#include "covrl/world.hpp"

using namespace covrl;

namespace {

LevelSpec load_l1() {
    std::ifstream in(std::string(COVRL_LEVELS_DIR) + "/L1.level");
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_level(buf.str());
}

LevelSpec from_rows(const std::vector<std::string>& rows) {
    LevelSpec spec;
    spec.name = "inline";
    spec.grid = TileGrid(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
    for (int y = 0; y < spec.grid.height(); ++y)
        for (int x = 0; x < spec.grid.width(); ++x) {
            char c = rows[y][static_cast<size_t>(x)];
            spec.grid.set({x, y},
                          c == '#' ? Tile::Wall : (c == 'F' ? Tile::Fire : Tile::Floor));
        }
    spec.active_spawn = {1, 1};
    return spec;
}

// Straight-segment sampling; an independent check that the Bresenham ray
// agrees on unambiguous geometry.
bool sampled_sight(const TileGrid& g, Pos a, Pos b) {
    const int steps = 1000;
    for (int i = 1; i < steps; ++i) {
        double t = static_cast<double>(i) / steps;
        int x = static_cast<int>(std::lround(a.x + t * (b.x - a.x)));
        int y = static_cast<int>(std::lround(a.y + t * (b.y - a.y)));
        if ((x == a.x && y == a.y) || (x == b.x && y == b.y)) continue;
        if (g.is_wall({x, y})) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("init_world places agents and initial entity values") {
    LevelSpec l1 = load_l1();
    WorldState world = init_world(l1);
    CHECK(world.tick() == 0);
    CHECK(world.entity_values().size() == 7);
    for (const auto& [id, value] : world.entity_values()) CHECK_FALSE(value);
    CHECK(world.agent("active").position == Pos{1, 6});
    CHECK(world.agent("active").health == 100);
    CHECK(world.agent("passive1").position == Pos{8, 1});
    CHECK(world.agent("passive1").alive);
}

TEST_CASE("init_world on an empty 3x3 level puts the agent at (1,1)") {
    LevelSpec spec = from_rows({"###", "#.#", "###"});
    WorldState world = init_world(spec);
    CHECK(world.agent("active").position == Pos{1, 1});
    CHECK(world.agent("active").health == 100);
}

TEST_CASE("init_world rejects a spawn on a Wall or a closed door") {
    LevelSpec spec = from_rows({"#####", "#...#", "#####"});
    spec.active_spawn = {0, 0};
    CHECK_THROWS_AS(init_world(spec), std::invalid_argument);

    spec.active_spawn = {2, 1};
    spec.entities.push_back({"d1", EntityKind::Door, {2, 1}, false});
    CHECK_THROWS_AS(init_world(spec), std::invalid_argument);
    spec.entities[0].initial_value = true;  // open door under the spawn is fine
    CHECK_NOTHROW(init_world(spec));
}

TEST_CASE("observe returns the nearby facts with line of sight") {
    LevelSpec l1 = load_l1();
    l1.active_spawn = {4, 6};  // next to bttn2, three tiles from door3
    WorldState world = init_world(l1);
    Observation obs = observe(world, "active", 3);
    REQUIRE(obs.facts.size() == 2);
    CHECK(obs.facts[0] == Fact{"bttn2", Attribute::IsPressed, false});
    CHECK(obs.facts[1] == Fact{"door3", Attribute::IsOpen, false});
    CHECK(obs.position == Pos{4, 6});
}

TEST_CASE("observe with radius 0 sees no entities") {
    LevelSpec l1 = load_l1();
    WorldState world = init_world(l1);
    CHECK(observe(world, "active", 0).facts.empty());
}

TEST_CASE("observe errors on dead or unknown agents") {
    LevelSpec l1 = load_l1();
    WorldState world = init_world(l1);
    CHECK_THROWS_AS(observe(world, "ghost", 5), std::invalid_argument);
    world.agent("active").health = 0;
    world.agent("active").alive = false;
    CHECK_THROWS_AS(observe(world, "active", 5), std::invalid_argument);
}

TEST_CASE("a wall inside the radius blocks sight of the entity behind it") {
    // 5x5 grid, wall at (2,2) squarely between agent (1,2) and button (3,2).
    LevelSpec spec = from_rows({"#####", "#...#", "#.#.#", "#...#", "#####"});
    spec.active_spawn = {1, 2};
    spec.entities.push_back({"b1", EntityKind::Button, {3, 2}, false});
    WorldState world = init_world(spec);

    CHECK_FALSE(line_of_sight(world, {1, 2}, {3, 2}));
    CHECK(line_of_sight(world, {1, 1}, {3, 1}));
    CHECK(observe(world, "active", 5).facts.empty());

    // ray-sampling oracle agrees on both cases
    CHECK_FALSE(sampled_sight(spec.grid, {1, 2}, {3, 2}));
    CHECK(sampled_sight(spec.grid, {1, 1}, {3, 1}));
}

TEST_CASE("a closed door blocks sight until it opens") {
    LevelSpec l1 = load_l1();
    WorldState world = init_world(l1);
    // (6,2) and (8,2) straddle door1 at (7,2)
    CHECK_FALSE(line_of_sight(world, {6, 2}, {9, 2}));
    world.toggle_button("bttn2");  // opens door1
    CHECK(line_of_sight(world, {6, 2}, {9, 2}));
}

TEST_CASE("execute_action walks to bttn3 and toggles it in five ticks") {
    LevelSpec l1 = load_l1();
    WorldState world = init_world(l1);
    ActionOutcome out = execute_action(world, "active", {ActionKind::Interact, "bttn3"}, 70);
    CHECK(out.outcome == Outcome::Completed);
    CHECK(out.ticks == 5);  // four BFS steps from (1,6) plus the interaction tick
    REQUIRE(out.toggle.has_value());
    CHECK(out.toggle->button_id == "bttn3");
    CHECK(out.toggle->doors_now.size() == 3);
    CHECK(world.entity_value("bttn3"));
    CHECK(world.entity_value("door1"));
    CHECK(world.tick() == 5);
}

TEST_CASE("traversing a closed door is Unreachable, not an error") {
    LevelSpec l1 = load_l1();
    WorldState world = init_world(l1);
    ActionOutcome out = execute_action(world, "active", {ActionKind::Traverse, "door1"}, 70);
    CHECK(out.outcome == Outcome::Unreachable);
    CHECK(out.ticks <= 70);
    CHECK(world.agent("active").alive);
}

TEST_CASE("a door sealed on every side is Unreachable without moving") {
    LevelSpec spec = from_rows({"######", "#.##.#", "######"});
    spec.active_spawn = {1, 1};
    spec.entities.push_back({"d1", EntityKind::Door, {4, 1}, false});
    WorldState world = init_world(spec);
    ActionOutcome out = execute_action(world, "active", {ActionKind::Traverse, "d1"}, 50);
    CHECK(out.outcome == Outcome::Unreachable);
    CHECK(out.ticks == 0);
}

TEST_CASE("crossing five fire tiles at 20 damage kills the agent") {
    LevelSpec spec = from_rows({"##########", "#.FFFFF..#", "##########"});
    spec.active_spawn = {1, 1};
    spec.entities.push_back({"b1", EntityKind::Button, {8, 1}, false});
    WorldState world = init_world(spec);
    ActionOutcome out = execute_action(world, "active", {ActionKind::Interact, "b1"}, 50);
    CHECK(out.outcome == Outcome::AgentDied);
    CHECK(out.ticks == 5);  // dies on the fifth fire tile: 5 * 20 = 100
    CHECK(world.agent("active").health == 0);
    CHECK_FALSE(world.agent("active").alive);
}

TEST_CASE("budget exhaustion stops an action mid-walk") {
    LevelSpec l1 = load_l1();
    WorldState world = init_world(l1);
    ActionOutcome out = execute_action(world, "active", {ActionKind::Interact, "bttn3"}, 2);
    CHECK(out.outcome == Outcome::BudgetExhausted);
    CHECK(out.ticks == 2);
    CHECK_FALSE(world.entity_value("bttn3"));
}

TEST_CASE("toggle_button fans out to connected doors") {
    LevelSpec l1 = load_l1();
    WorldState world = init_world(l1);

    SUBCASE("bttn3 opens all three doors") {
        ToggleEvent ev = world.toggle_button("bttn3");
        CHECK(ev.button_was == false);
        CHECK(ev.button_now == true);
        REQUIRE(ev.doors_now.size() == 3);
        for (const auto& [door, now] : ev.doors_now) CHECK(now);
        CHECK(world.entity_value("door1"));
        CHECK(world.entity_value("door2"));
        CHECK(world.entity_value("door3"));
    }
    SUBCASE("bttn1 toggles only itself") {
        ToggleEvent ev = world.toggle_button("bttn1");
        CHECK(ev.doors_now.empty());
        CHECK(world.entity_value("bttn1"));
        CHECK_FALSE(world.entity_value("door1"));
    }
    SUBCASE("toggling twice restores every value") {
        auto before = world.entity_values();
        world.toggle_button("bttn3");
        world.toggle_button("bttn3");
        CHECK(world.entity_values() == before);
    }
    SUBCASE("unknown or non-button ids are errors") {
        CHECK_THROWS_AS(world.toggle_button("door1"), std::invalid_argument);
        CHECK_THROWS_AS(world.toggle_button("nope"), std::invalid_argument);
    }
}

TEST_CASE("door state equals initial value xor toggle parity") {
    LevelSpec l1 = load_l1();
    WorldState world = init_world(l1);
    Rng rng(77);
    std::map<std::string, int> presses;
    std::vector<std::string> buttons;
    for (const auto& e : l1.entities)
        if (e.kind == EntityKind::Button) buttons.push_back(e.id);
    for (int i = 0; i < 500; ++i) {
        const std::string& b = buttons[rng.next_below(buttons.size())];
        world.toggle_button(b);
        presses[b]++;
    }
    for (const auto& e : l1.entities) {
        if (e.kind != EntityKind::Door) continue;
        int parity = 0;
        for (const auto& c : l1.connections)
            for (const auto& d : c.door_ids)
                if (d == e.id) parity += presses[c.button_id];
        CHECK(world.entity_value(e.id) == (e.initial_value != (parity % 2 == 1)));
    }
}

TEST_CASE("observation soundness: facts always match current entity values") {
    LevelSpec l1 = load_l1();
    WorldState world = init_world(l1);
    Rng rng(5);
    std::vector<std::string> buttons{"bttn1", "bttn2", "bttn3", "bttn4"};
    for (int i = 0; i < 100; ++i) {
        world.toggle_button(buttons[rng.next_below(buttons.size())]);
        Observation obs = observe(world, "passive1", 8);
        for (const auto& f : obs.facts) CHECK(f.value == world.entity_value(f.entity_id));
    }
}

TEST_CASE("shortest_path basics") {
    LevelSpec corridor = from_rows({"########", "#......#", "########"});
    WorldState world = init_world(corridor);

    SUBCASE("from == to is an empty path") {
        auto p = shortest_path(world, {1, 1}, {1, 1});
        REQUIRE(p.has_value());
        CHECK(p->empty());
    }
    SUBCASE("walking a straight corridor end to end takes 5 steps") {
        auto p = shortest_path(world, {1, 1}, {6, 1});
        REQUIRE(p.has_value());
        CHECK(p->size() == 5);
        CHECK(p->back() == Pos{6, 1});
    }
    SUBCASE("coordinates outside the grid are errors") {
        CHECK_THROWS_AS(shortest_path(world, {1, 1}, {99, 1}), std::invalid_argument);
    }
}

TEST_CASE("a target behind a closed door with no detour is unreachable") {
    LevelSpec spec = from_rows({"#######", "#..#..#", "#######"});
    spec.entities.push_back({"d1", EntityKind::Door, {3, 1}, false});
    // door tile is Wall in the grid above; rebuild with Floor under the door
    spec.grid.set({3, 1}, Tile::Floor);
    WorldState world = init_world(spec);

    CHECK_FALSE(shortest_path(world, {1, 1}, {5, 1}).has_value());

    // flood-fill oracle: reachable set from (1,1) stops at the closed door
    std::set<std::pair<int, int>> reach{{1, 1}};
    bool grew = true;
    while (grew) {
        grew = false;
        for (auto [x, y] : std::set<std::pair<int, int>>(reach))
            for (auto [dx, dy] : {std::pair{0, -1}, {1, 0}, {0, 1}, {-1, 0}}) {
                Pos n{x + dx, y + dy};
                if (world.passable(n) && reach.insert({n.x, n.y}).second) grew = true;
            }
    }
    CHECK_FALSE(reach.count({5, 1}));

    // once the door opens the same query succeeds
    spec.entities[0].initial_value = true;
    WorldState open_world = init_world(spec);
    auto p = shortest_path(open_world, {1, 1}, {5, 1});
    REQUIRE(p.has_value());
    CHECK(p->size() == 4);
}

TEST_CASE("shortest_path matches an exhaustive-relaxation oracle on random grids") {
    Rng rng(2024);
    for (int iter = 0; iter < 150; ++iter) {
        const int w = 4 + static_cast<int>(rng.next_below(7));   // up to 10
        const int h = 4 + static_cast<int>(rng.next_below(7));
        std::vector<std::string> rows(static_cast<size_t>(h));
        for (int y = 0; y < h; ++y) {
            std::string row;
            for (int x = 0; x < w; ++x) {
                bool border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
                row += border || rng.chance(0.25) ? '#' : '.';
            }
            rows[static_cast<size_t>(y)] = row;
        }
        LevelSpec spec = from_rows(rows);
        std::vector<Pos> open;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (spec.grid.at({x, y}) != Tile::Wall) open.push_back({x, y});
        if (open.empty()) continue;
        spec.active_spawn = open[rng.next_below(open.size())];
        WorldState world = init_world(spec);

        // Bellman-Ford-style relaxation, independent of the BFS implementation.
        const int INF = 1 << 20;
        std::vector<int> dist(static_cast<size_t>(w) * h, INF);
        dist[static_cast<size_t>(spec.active_spawn.y) * w + spec.active_spawn.x] = 0;
        for (int pass = 0; pass < w * h; ++pass)
            for (Pos p : open)
                for (auto [dx, dy] : {std::pair{0, -1}, {1, 0}, {0, 1}, {-1, 0}}) {
                    Pos n{p.x + dx, p.y + dy};
                    if (!spec.grid.is_walkable(n)) continue;
                    int& dn = dist[static_cast<size_t>(n.y) * w + n.x];
                    int dp = dist[static_cast<size_t>(p.y) * w + p.x];
                    if (dp + 1 < dn) dn = dp + 1;
                }

        for (Pos target : open) {
            auto path = shortest_path(world, spec.active_spawn, target);
            int expect = dist[static_cast<size_t>(target.y) * w + target.x];
            if (expect == INF) {
                CHECK_FALSE(path.has_value());
            } else {
                REQUIRE(path.has_value());
                CHECK(static_cast<int>(path->size()) == expect);
            }
        }
    }
}

TEST_CASE("identical action sequences replay to identical world states") {
    LevelSpec l1 = load_l1();
    auto run = [&]() {
        WorldState world = init_world(l1);
        std::vector<std::string> log;
        for (const Action& a :
             {Action{ActionKind::Interact, "bttn3"}, Action{ActionKind::Traverse, "door1"},
              Action{ActionKind::Interact, "bttn1"}, Action{ActionKind::Traverse, "door2"}}) {
            ActionOutcome out = execute_action(world, "active", a, 70);
            log.push_back(to_string(a) + ":" + to_string(out.outcome) + ":" +
                          std::to_string(out.ticks));
        }
        log.push_back(std::to_string(world.tick()));
        for (const auto& [id, v] : std::map<std::string, bool>(world.entity_values().begin(),
                                                               world.entity_values().end()))
            log.push_back(id + "=" + (v ? "t" : "f"));
        return log;
    };
    CHECK(run() == run());
}
