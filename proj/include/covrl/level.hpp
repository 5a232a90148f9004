#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace covrl {

enum class Tile : uint8_t { Wall, Floor, Fire };

enum class EntityKind : uint8_t { Door, Button };

enum class SizeClass : uint8_t { Small, Medium, Large };

std::string to_string(SizeClass c);
std::optional<SizeClass> size_class_from_string(const std::string& s);

struct Pos {
    int x = 0;
    int y = 0;
    bool operator==(const Pos&) const = default;
};

inline int chebyshev(Pos a, Pos b) {
    int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
    int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
    return dx > dy ? dx : dy;
}

// Row-major tile grid, 0-based coordinates, y growing downward.
class TileGrid {
public:
    TileGrid() = default;
    TileGrid(int width, int height, Tile fill = Tile::Wall)
        : width_(width), height_(height), tiles_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool in_bounds(Pos p) const { return p.x >= 0 && p.x < width_ && p.y >= 0 && p.y < height_; }
    Tile at(Pos p) const { return tiles_[static_cast<size_t>(p.y) * width_ + p.x]; }
    void set(Pos p, Tile t) { tiles_[static_cast<size_t>(p.y) * width_ + p.x] = t; }
    bool is_wall(Pos p) const { return !in_bounds(p) || at(p) == Tile::Wall; }
    // Walkable in the static sense: Floor or Fire (door occupancy is dynamic).
    bool is_walkable(Pos p) const { return in_bounds(p) && at(p) != Tile::Wall; }

    bool operator==(const TileGrid&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Tile> tiles_;
};

struct Entity {
    std::string id;
    EntityKind kind = EntityKind::Button;
    Pos position;
    bool initial_value = false;  // Door: isOpen, Button: isPressed
    bool operator==(const Entity&) const = default;
};

struct Connection {
    std::string button_id;
    std::vector<std::string> door_ids;  // declaration order, may be empty
    bool operator==(const Connection&) const = default;
};

struct LevelSpec {
    std::string name;
    SizeClass size_class = SizeClass::Small;
    TileGrid grid;
    std::vector<Entity> entities;
    std::vector<Connection> connections;
    Pos active_spawn;
    std::vector<Pos> passive_spawns;

    const Entity* find_entity(const std::string& id) const;
    int entity_index(const std::string& id) const;  // -1 when absent
    std::vector<std::string> doors_toggled_by(const std::string& button_id) const;

    bool operator==(const LevelSpec&) const = default;
};

struct ParseError : std::runtime_error {
    ParseError(int line, int column, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(column) +
                             ": " + what),
          line(line),
          column(column) {}
    int line;
    int column;
};

struct Violation {
    bool warning = false;  // reachability warnings are non-fatal
    std::string message;
};

// Sectioned line-oriented level format; see the docs in level.cpp for the grammar.
LevelSpec parse_level(const std::string& text);
std::string serialize_level(const LevelSpec& spec);

// All invariant violations plus non-fatal reachability warnings; a spec is
// valid when it has no non-warning entries.
std::vector<Violation> validate_level(const LevelSpec& spec);
bool is_valid(const std::vector<Violation>& violations);

// Deterministic procedural generator; identical (size_class, seed) pairs
// produce identical levels on every platform.
LevelSpec generate_level(SizeClass size_class, uint64_t seed);

}  // namespace covrl
