#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "covrl/level.hpp"
#include "covrl/rng.hpp"

namespace covrl {

namespace {

struct ClassParams {
    int grid_size;
    int slots;  // slots x slots lattice of candidate rooms
    int rooms_min, rooms_max;
    int doors_min, doors_max;
    int buttons_min, buttons_max;
    int pairs_min, pairs_max;
    int fires_min, fires_max;
    int hidden_per_3;  // buttons tucked into wall alcoves, out of every 3
};

ClassParams params_for(SizeClass c) {
    switch (c) {
        case SizeClass::Small:
            return {20, 3, 5, 7, 3, 4, 4, 5, 4, 6, 0, 1, 0};
        case SizeClass::Medium:
            return {35, 4, 9, 12, 6, 8, 7, 9, 8, 12, 1, 2, 1};
        case SizeClass::Large:
            return {50, 5, 13, 17, 10, 12, 11, 14, 14, 20, 2, 3, 2};
    }
    return {20, 3, 5, 7, 3, 4, 4, 5, 4, 6, 0, 1, 0};
}

struct Rect {
    int x0, y0, x1, y1;  // inclusive
    bool contains(Pos p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

struct Room {
    int slot_x, slot_y;
    Rect rect;
    int parent = -1;  // index into rooms, -1 for the spawn room
};

constexpr int kMaxAttempts = 64;

}  // namespace

LevelSpec generate_level(SizeClass size_class, uint64_t seed) {
    const ClassParams P = params_for(size_class);
    Rng rng(seed ^ (0xC0FFEE1234ULL + static_cast<uint64_t>(size_class)));

    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const int S = P.grid_size;
        const int n = P.slots;

        // Slot boundaries over the interior [1, S-2].
        std::vector<int> bounds(n + 1);
        for (int i = 0; i <= n; ++i) bounds[i] = 1 + i * (S - 2) / n;
        auto slot_center = [&](int i) { return (bounds[i] + bounds[i + 1] - 1) / 2; };

        const int doors = rng.next_int(P.doors_min, P.doors_max);
        const int rooms_wanted =
            std::max(doors + 1, rng.next_int(P.rooms_min, P.rooms_max));
        const int buttons = std::max(doors + 1, rng.next_int(P.buttons_min, P.buttons_max));
        const int pairs = std::max(doors + 1, rng.next_int(P.pairs_min, P.pairs_max));
        const int fires = rng.next_int(P.fires_min, P.fires_max);

        // Grow a connected set of slots; the growth edges form the room tree.
        std::vector<Room> rooms;
        std::vector<int> slot_room(static_cast<size_t>(n) * n, -1);
        auto slot_at = [&](int sx, int sy) -> int& { return slot_room[sy * n + sx]; };
        {
            int sx = rng.next_int(0, n - 1), sy = rng.next_int(0, n - 1);
            rooms.push_back({sx, sy, {}, -1});
            slot_at(sx, sy) = 0;
            std::vector<std::pair<int, int>> frontier;  // (room index, direction)
            while (static_cast<int>(rooms.size()) < rooms_wanted) {
                frontier.clear();
                for (size_t r = 0; r < rooms.size(); ++r) {
                    static const int DX[4] = {0, 1, 0, -1}, DY[4] = {-1, 0, 1, 0};
                    for (int d = 0; d < 4; ++d) {
                        int nx = rooms[r].slot_x + DX[d], ny = rooms[r].slot_y + DY[d];
                        if (nx < 0 || nx >= n || ny < 0 || ny >= n) continue;
                        if (slot_at(nx, ny) == -1)
                            frontier.emplace_back(static_cast<int>(r), d);
                    }
                }
                if (frontier.empty()) break;
                auto [r, d] = frontier[rng.next_below(frontier.size())];
                static const int DX[4] = {0, 1, 0, -1}, DY[4] = {-1, 0, 1, 0};
                int nx = rooms[r].slot_x + DX[d], ny = rooms[r].slot_y + DY[d];
                rooms.push_back({nx, ny, {}, r});
                slot_at(nx, ny) = static_cast<int>(rooms.size()) - 1;
            }
        }
        if (static_cast<int>(rooms.size()) < doors + 1) continue;  // retry

        // Carve room rectangles. Every room spans its slot's center row and
        // column so neighbor corridors can run straight along those lines.
        TileGrid grid(S, S, Tile::Wall);
        for (auto& room : rooms) {
            const int sx = room.slot_x, sy = room.slot_y;
            const int cx = slot_center(sx), cy = slot_center(sy);
            const int lox = bounds[sx] + 1, hix = bounds[sx + 1] - 2;
            const int loy = bounds[sy] + 1, hiy = bounds[sy + 1] - 2;
            int x0 = rng.next_int(lox, std::min(cx, hix - 2));
            int x1 = rng.next_int(std::max(cx, x0 + 2), hix);
            int y0 = rng.next_int(loy, std::min(cy, hiy - 2));
            int y1 = rng.next_int(std::max(cy, y0 + 2), hiy);
            room.rect = {x0, y0, x1, y1};
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) grid.set({x, y}, Tile::Floor);
        }

        // Corridors along the shared center line of each tree edge, and door
        // positions at corridor midpoints. Tree edges are bridges, so every
        // door genuinely gates its subtree.
        std::vector<Pos> edge_door_pos(rooms.size());  // indexed by child room
        for (size_t r = 1; r < rooms.size(); ++r) {
            const Room& child = rooms[r];
            const Room& parent = rooms[child.parent];
            std::vector<Pos> corridor;
            if (child.slot_y == parent.slot_y) {
                const int cy = slot_center(child.slot_y);
                const Room& left = child.slot_x < parent.slot_x ? child : parent;
                const Room& right = child.slot_x < parent.slot_x ? parent : child;
                for (int x = left.rect.x1 + 1; x < right.rect.x0; ++x)
                    corridor.push_back({x, cy});
            } else {
                const int cx = slot_center(child.slot_x);
                const Room& top = child.slot_y < parent.slot_y ? child : parent;
                const Room& bottom = child.slot_y < parent.slot_y ? parent : child;
                for (int y = top.rect.y1 + 1; y < bottom.rect.y0; ++y)
                    corridor.push_back({cx, y});
            }
            for (Pos p : corridor) grid.set(p, Tile::Floor);
            edge_door_pos[r] = corridor[corridor.size() / 2];
        }

        // Pick door edges in breadth-first order from the spawn room so that a
        // door's parent room is always reachable once earlier doors are open.
        std::vector<int> bfs_order;
        {
            std::vector<std::vector<int>> children(rooms.size());
            for (size_t r = 1; r < rooms.size(); ++r)
                children[rooms[r].parent].push_back(static_cast<int>(r));
            std::vector<int> queue{0};
            for (size_t qi = 0; qi < queue.size(); ++qi) {
                for (int c : children[queue[qi]]) {
                    bfs_order.push_back(c);  // edge (parent -> c)
                    queue.push_back(c);
                }
            }
        }
        std::vector<int> door_edges = bfs_order;
        while (static_cast<int>(door_edges.size()) > doors) {
            // Drop random leaf-most edges first to keep gating chains deep.
            door_edges.erase(door_edges.begin() +
                             static_cast<long>(door_edges.size() - 1 -
                                               rng.next_below(door_edges.size() / 2 + 1)));
        }

        LevelSpec spec;
        spec.name = std::string(size_class == SizeClass::Small
                                    ? "small"
                                    : size_class == SizeClass::Medium ? "medium" : "large") +
                    "-s" + std::to_string(seed);
        spec.size_class = size_class;
        spec.grid = grid;

        std::vector<uint8_t> occupied(static_cast<size_t>(S) * S, 0);
        auto occupy = [&](Pos p) { occupied[static_cast<size_t>(p.y) * S + p.x] = 1; };
        auto is_free = [&](Pos p) {
            return grid.at(p) == Tile::Floor && !occupied[static_cast<size_t>(p.y) * S + p.x];
        };

        for (size_t i = 0; i < door_edges.size(); ++i) {
            Pos dp = edge_door_pos[door_edges[i]];
            spec.entities.push_back(
                {"door" + std::to_string(i + 1), EntityKind::Door, dp, false});
            occupy(dp);
        }

        // Spawns live in the root room.
        auto pick_in_room = [&](const Room& room) -> std::optional<Pos> {
            for (int tries = 0; tries < 64; ++tries) {
                Pos p{rng.next_int(room.rect.x0, room.rect.x1),
                      rng.next_int(room.rect.y0, room.rect.y1)};
                if (is_free(p)) return p;
            }
            return std::nullopt;
        };
        auto active = pick_in_room(rooms[0]);
        if (!active) continue;
        occupy(*active);
        spec.active_spawn = *active;
        auto passive = pick_in_room(rooms[0]);
        if (!passive) continue;
        occupy(*passive);
        spec.passive_spawns.push_back(*passive);

        // bttn1 is connected to nothing. Each door gets one guaranteed button
        // somewhere in the region already unlocked when that door comes up in
        // BFS order, so the level always opens progressively, but the button
        // can sit rooms away from its door. The rest land in random rooms.
        std::vector<std::vector<int>> doorless_children(rooms.size());
        {
            std::vector<uint8_t> doored(rooms.size(), 0);
            for (int e : door_edges) doored[static_cast<size_t>(e)] = 1;
            for (size_t r = 1; r < rooms.size(); ++r)
                if (!doored[r]) doorless_children[rooms[r].parent].push_back(static_cast<int>(r));
        }
        std::vector<int> unlocked;
        std::vector<uint8_t> in_unlocked(rooms.size(), 0);
        auto flood_unlocked = [&](int start) {
            std::vector<int> stack{start};
            while (!stack.empty()) {
                int r = stack.back();
                stack.pop_back();
                if (in_unlocked[static_cast<size_t>(r)]) continue;
                in_unlocked[static_cast<size_t>(r)] = 1;
                unlocked.push_back(r);
                for (int c : doorless_children[static_cast<size_t>(r)]) stack.push_back(c);
            }
        };
        flood_unlocked(0);

        // A 2-deep pocket carved into a room wall; the button at its end is
        // only visible through the mouth tile, which scales search difficulty
        // with level class.
        auto carve_alcove = [&](const Room& room) -> std::optional<Pos> {
            static const int DX[4] = {0, 1, 0, -1}, DY[4] = {-1, 0, 1, 0};
            for (int tries = 0; tries < 32; ++tries) {
                int d = rng.next_int(0, 3);
                Pos mouth{rng.next_int(room.rect.x0, room.rect.x1),
                          rng.next_int(room.rect.y0, room.rect.y1)};
                if (d == 0) mouth.y = room.rect.y0;
                if (d == 1) mouth.x = room.rect.x1;
                if (d == 2) mouth.y = room.rect.y1;
                if (d == 3) mouth.x = room.rect.x0;
                Pos p1{mouth.x + DX[d], mouth.y + DY[d]};
                Pos p2{p1.x + DX[d], p1.y + DY[d]};
                if (p2.x < 1 || p2.x > S - 2 || p2.y < 1 || p2.y > S - 2) continue;
                if (grid.at(p1) != Tile::Wall || grid.at(p2) != Tile::Wall) continue;
                bool sealed = true;
                for (Pos q : {p1, p2})
                    for (int nd = 0; nd < 4; ++nd) {
                        Pos n{q.x + DX[nd], q.y + DY[nd]};
                        if (n == mouth || n == p1 || n == p2) continue;
                        if (!grid.in_bounds(n) || grid.at(n) != Tile::Wall) sealed = false;
                    }
                if (!sealed) continue;
                grid.set(p1, Tile::Floor);
                grid.set(p2, Tile::Floor);
                return p2;
            }
            return std::nullopt;
        };

        // Small levels put buttons on the room's center lines, the lanes the
        // door patrol walks, so they are always discovered; larger classes
        // scatter and partially hide them.
        auto pick_on_center_lines = [&](const Room& room) -> std::optional<Pos> {
            const int cx = slot_center(room.slot_x), cy = slot_center(room.slot_y);
            for (int tries = 0; tries < 64; ++tries) {
                Pos p = rng.chance(0.5)
                            ? Pos{cx, rng.next_int(room.rect.y0, room.rect.y1)}
                            : Pos{rng.next_int(room.rect.x0, room.rect.x1), cy};
                if (is_free(p)) return p;
            }
            return std::nullopt;
        };

        bool placement_failed = false;
        std::vector<std::string> button_ids;
        std::vector<int> button_rooms;
        auto place_button = [&](int room_index) {
            const Room& room = rooms[static_cast<size_t>(room_index)];
            bool hide = P.hidden_per_3 > 0 &&
                        static_cast<int>(button_ids.size() % 3) < P.hidden_per_3;
            std::optional<Pos> p = hide ? carve_alcove(room) : std::nullopt;
            if (!p && P.hidden_per_3 == 0) p = pick_on_center_lines(room);
            if (!p) p = pick_in_room(room);
            if (!p) {
                placement_failed = true;
                return;
            }
            occupy(*p);
            std::string id = "bttn" + std::to_string(button_ids.size() + 1);
            button_ids.push_back(id);
            button_rooms.push_back(room_index);
            spec.entities.push_back({id, EntityKind::Button, *p, false});
        };
        // Small keeps every guaranteed button in the home region (chain depth
        // one, like the running-example calibration); larger classes let the
        // unlock frontier grow so later doors demand longer fetch chains.
        const size_t home_region = unlocked.size();
        place_button(static_cast<int>(rng.next_below(rooms.size())));
        for (size_t i = 0; i < door_edges.size() && !placement_failed; ++i) {
            size_t pool = size_class == SizeClass::Small ? home_region : unlocked.size();
            place_button(unlocked[rng.next_below(pool)]);
            flood_unlocked(door_edges[i]);
        }
        while (static_cast<int>(button_ids.size()) < buttons && !placement_failed)
            place_button(static_cast<int>(rng.next_below(rooms.size())));
        if (placement_failed) continue;

        // Doors gating a room on its path back to the spawn. A button must
        // never toggle one of those for its own room, or pressing it could
        // trap the agent with no recovery (the opener would sit inside the
        // sealed region).
        std::vector<int> door_index_of_room(rooms.size(), -1);
        for (size_t i = 0; i < door_edges.size(); ++i)
            door_index_of_room[static_cast<size_t>(door_edges[i])] = static_cast<int>(i);
        auto ancestor_doors = [&](int room_index) {
            std::vector<int> out;
            for (int r = room_index; r != 0; r = rooms[static_cast<size_t>(r)].parent)
                if (door_index_of_room[static_cast<size_t>(r)] >= 0)
                    out.push_back(door_index_of_room[static_cast<size_t>(r)]);
            return out;
        };

        // Connection pairs: the guaranteed button->door pairs plus random
        // extras up to the target count. Anything past the guaranteed set
        // necessarily reuses a button or a door, giving at least one fan-out.
        std::vector<std::pair<int, int>> pair_set;  // (button index, door index)
        for (size_t i = 0; i < door_edges.size(); ++i)
            pair_set.emplace_back(static_cast<int>(i + 1), static_cast<int>(i));
        int guard = 0;
        while (static_cast<int>(pair_set.size()) < pairs && guard++ < 512) {
            int b = rng.next_int(1, static_cast<int>(button_ids.size()) - 1);
            int d = rng.next_int(0, static_cast<int>(door_edges.size()) - 1);
            auto blocked = ancestor_doors(button_rooms[static_cast<size_t>(b)]);
            if (std::find(blocked.begin(), blocked.end(), d) != blocked.end()) continue;
            if (std::find(pair_set.begin(), pair_set.end(), std::make_pair(b, d)) ==
                pair_set.end())
                pair_set.emplace_back(b, d);
        }
        if (static_cast<int>(pair_set.size()) < std::min(pairs, doors + 1)) continue;

        for (size_t b = 0; b < button_ids.size(); ++b) {
            Connection c;
            c.button_id = button_ids[b];
            for (auto [pb, pd] : pair_set)
                if (pb == static_cast<int>(b))
                    c.door_ids.push_back("door" + std::to_string(pd + 1));
            std::sort(c.door_ids.begin(), c.door_ids.end());
            spec.connections.push_back(std::move(c));
        }

        // Fire patches: 2-4 tile blobs inside rooms, kept Chebyshev >= 2 away
        // from entities and spawns so they never sit on a doorway.
        auto clear_of_occupied = [&](Pos p) {
            for (const auto& e : spec.entities)
                if (chebyshev(p, e.position) < 2) return false;
            if (chebyshev(p, spec.active_spawn) < 2) return false;
            for (Pos s : spec.passive_spawns)
                if (chebyshev(p, s) < 2) return false;
            return true;
        };
        int placed_patches = 0;
        for (int tries = 0; tries < 256 && placed_patches < fires; ++tries) {
            const Room& room = rooms[static_cast<size_t>(rng.next_below(rooms.size()))];
            Pos seed_tile{rng.next_int(room.rect.x0, room.rect.x1),
                          rng.next_int(room.rect.y0, room.rect.y1)};
            if (grid.at(seed_tile) != Tile::Floor || !clear_of_occupied(seed_tile)) continue;
            std::vector<Pos> blob{seed_tile};
            int blob_size = rng.next_int(2, 4);
            while (static_cast<int>(blob.size()) < blob_size) {
                Pos base = blob[rng.next_below(blob.size())];
                static const int DX[4] = {0, 1, 0, -1}, DY[4] = {-1, 0, 1, 0};
                int d = rng.next_int(0, 3);
                Pos p{base.x + DX[d], base.y + DY[d]};
                if (room.rect.contains(p) && grid.at(p) == Tile::Floor &&
                    clear_of_occupied(p) &&
                    std::find(blob.begin(), blob.end(), p) == blob.end())
                    blob.push_back(p);
                else
                    break;
            }
            for (Pos p : blob) grid.set(p, Tile::Fire);
            ++placed_patches;
        }
        if (placed_patches < P.fires_min) continue;
        spec.grid = grid;

        if (is_valid(validate_level(spec)) &&
            std::none_of(validate_level(spec).begin(), validate_level(spec).end(),
                         [](const Violation& v) { return v.warning; }))
            return spec;
    }
    throw std::runtime_error("level generation failed after " + std::to_string(kMaxAttempts) +
                             " attempts (size " + to_string(size_class) + ", seed " +
                             std::to_string(seed) + ")");
}

}  // namespace covrl
