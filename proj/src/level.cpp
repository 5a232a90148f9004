#include "covrl/level.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <set>
#include <sstream>

namespace covrl {

std::string to_string(SizeClass c) {
    switch (c) {
        case SizeClass::Small: return "Small";
        case SizeClass::Medium: return "Medium";
        case SizeClass::Large: return "Large";
    }
    return "Small";
}

std::optional<SizeClass> size_class_from_string(const std::string& s) {
    if (s == "Small" || s == "small") return SizeClass::Small;
    if (s == "Medium" || s == "medium") return SizeClass::Medium;
    if (s == "Large" || s == "large") return SizeClass::Large;
    return std::nullopt;
}

const Entity* LevelSpec::find_entity(const std::string& id) const {
    for (const auto& e : entities)
        if (e.id == id) return &e;
    return nullptr;
}

int LevelSpec::entity_index(const std::string& id) const {
    for (size_t i = 0; i < entities.size(); ++i)
        if (entities[i].id == id) return static_cast<int>(i);
    return -1;
}

std::vector<std::string> LevelSpec::doors_toggled_by(const std::string& button_id) const {
    for (const auto& c : connections)
        if (c.button_id == button_id) return c.door_ids;
    return {};
}

// ---------------------------------------------------------------------------
// Parsing
//
// Sectioned, line-oriented, fixed section order:
//   [meta]         name = <string>, size_class = <Small|Medium|Large>
//   [grid]         one row per line, '#'=Wall '.'=Floor 'F'=Fire
//   [entities]     <button|door> <id> <x> <y> <true|false>
//   [connections]  <button> -> [door[,door...]]
//   [spawns]       <active|passive> <x> <y>
// Outside [grid], '#' starts a comment. Unknown sections, unknown keys and
// trailing tokens are errors.
// ---------------------------------------------------------------------------

namespace {

struct Line {
    int number;
    std::string text;
};

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& s) {
    size_t pos = s.find('#');
    return pos == std::string::npos ? s : s.substr(0, pos);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

bool parse_bool(const std::string& s, bool& out) {
    if (s == "true") { out = true; return true; }
    if (s == "false") { out = false; return true; }
    return false;
}

bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    size_t i = (s[0] == '-') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    try {
        out = std::stoi(s);
    } catch (...) {
        return false;
    }
    return true;
}

}  // namespace

LevelSpec parse_level(const std::string& text) {
    LevelSpec spec;

    std::vector<Line> lines;
    {
        std::istringstream in(text);
        std::string raw;
        int n = 0;
        while (std::getline(in, raw)) lines.push_back({++n, raw});
    }

    static const std::vector<std::string> section_order = {"meta", "grid", "entities",
                                                           "connections", "spawns"};
    size_t li = 0;
    int section = -1;  // index into section_order

    bool have_name = false, have_class = false;
    std::vector<std::string> grid_rows;
    int grid_line = 0;
    std::set<std::string> ids;
    std::set<std::string> connected_buttons;
    std::optional<Pos> active_spawn;

    auto expect_section = [&](const std::string& got, int line) {
        int next = section + 1;
        if (next >= static_cast<int>(section_order.size()) || section_order[next] != got) {
            if (std::find(section_order.begin(), section_order.end(), got) ==
                section_order.end())
                throw ParseError(line, 1, "unknown section [" + got + "]");
            throw ParseError(line, 1, "section [" + got + "] out of order; expected [" +
                                          (next < static_cast<int>(section_order.size())
                                               ? section_order[next]
                                               : "end of file") +
                                          "]");
        }
        section = next;
    };

    for (; li < lines.size(); ++li) {
        const int ln = lines[li].number;
        const std::string& raw = lines[li].text;
        const bool in_grid = section == 1;

        std::string line = in_grid ? trim(raw) : trim(strip_comment(raw));
        if (line.empty()) continue;

        if (line[0] == '[') {
            size_t close = line.find(']');
            if (close == std::string::npos) throw ParseError(ln, 1, "unterminated section header");
            std::string rest = trim(strip_comment(line.substr(close + 1)));
            if (!rest.empty()) throw ParseError(ln, static_cast<int>(close + 2),
                                                "trailing tokens after section header");
            expect_section(line.substr(1, close - 1), ln);
            continue;
        }

        switch (section) {
            case -1:
                throw ParseError(ln, 1, "content before [meta] section");
            case 0: {  // meta
                size_t eq = line.find('=');
                if (eq == std::string::npos) throw ParseError(ln, 1, "expected key = value");
                std::string key = trim(line.substr(0, eq));
                std::string value = trim(line.substr(eq + 1));
                if (key == "name") {
                    spec.name = value;
                    have_name = true;
                } else if (key == "size_class") {
                    auto c = size_class_from_string(value);
                    if (!c) throw ParseError(ln, static_cast<int>(eq + 2),
                                             "unknown size_class '" + value + "'");
                    spec.size_class = *c;
                    have_class = true;
                } else {
                    throw ParseError(ln, 1, "unknown meta key '" + key + "'");
                }
                break;
            }
            case 1: {  // grid
                for (char ch : line)
                    if (ch != '#' && ch != '.' && ch != 'F')
                        throw ParseError(ln, static_cast<int>(line.find(ch)) + 1,
                                         std::string("invalid grid character '") + ch + "'");
                if (!grid_rows.empty() && line.size() != grid_rows.front().size())
                    throw ParseError(ln, 1, "grid row width mismatch");
                if (grid_rows.empty()) grid_line = ln;
                grid_rows.push_back(line);
                break;
            }
            case 2: {  // entities
                auto toks = split_ws(line);
                if (toks.size() != 5)
                    throw ParseError(ln, 1, "expected: <kind> <id> <x> <y> <initial>");
                Entity e;
                if (toks[0] == "button")
                    e.kind = EntityKind::Button;
                else if (toks[0] == "door")
                    e.kind = EntityKind::Door;
                else
                    throw ParseError(ln, 1, "unknown entity kind '" + toks[0] + "'");
                e.id = toks[1];
                if (!parse_int(toks[2], e.position.x) || !parse_int(toks[3], e.position.y))
                    throw ParseError(ln, 1, "bad coordinates for '" + e.id + "'");
                if (!parse_bool(toks[4], e.initial_value))
                    throw ParseError(ln, 1, "initial value must be true or false");
                if (!ids.insert(e.id).second)
                    throw ParseError(ln, 1, "duplicate entity id '" + e.id + "'");
                spec.entities.push_back(std::move(e));
                break;
            }
            case 3: {  // connections
                size_t arrow = line.find("->");
                if (arrow == std::string::npos)
                    throw ParseError(ln, 1, "expected: <button> -> [doors]");
                Connection c;
                c.button_id = trim(line.substr(0, arrow));
                if (c.button_id.empty() || split_ws(c.button_id).size() != 1)
                    throw ParseError(ln, 1, "expected a single button id before '->'");
                const Entity* btn = spec.find_entity(c.button_id);
                if (!btn)
                    throw ParseError(ln, 1, "undeclared button '" + c.button_id + "'");
                if (btn->kind != EntityKind::Button)
                    throw ParseError(ln, 1, "'" + c.button_id + "' is not a button");
                if (!connected_buttons.insert(c.button_id).second)
                    throw ParseError(ln, 1, "duplicate connection line for '" + c.button_id + "'");
                std::string rhs = trim(line.substr(arrow + 2));
                if (!rhs.empty()) {
                    std::istringstream in(rhs);
                    std::string door;
                    std::set<std::string> seen;
                    while (std::getline(in, door, ',')) {
                        door = trim(door);
                        if (door.empty()) throw ParseError(ln, 1, "empty door id in list");
                        const Entity* d = spec.find_entity(door);
                        if (!d) throw ParseError(ln, 1, "undeclared door '" + door + "'");
                        if (d->kind != EntityKind::Door)
                            throw ParseError(ln, 1, "'" + door + "' is not a door");
                        if (!seen.insert(door).second)
                            throw ParseError(ln, 1, "duplicate door '" + door + "' in list");
                        c.door_ids.push_back(door);
                    }
                }
                spec.connections.push_back(std::move(c));
                break;
            }
            case 4: {  // spawns
                auto toks = split_ws(line);
                if (toks.size() != 3) throw ParseError(ln, 1, "expected: <role> <x> <y>");
                Pos p;
                if (!parse_int(toks[1], p.x) || !parse_int(toks[2], p.y))
                    throw ParseError(ln, 1, "bad spawn coordinates");
                if (toks[0] == "active") {
                    if (active_spawn) throw ParseError(ln, 1, "duplicate active spawn");
                    active_spawn = p;
                } else if (toks[0] == "passive") {
                    spec.passive_spawns.push_back(p);
                } else {
                    throw ParseError(ln, 1, "unknown spawn role '" + toks[0] + "'");
                }
                break;
            }
            default:
                throw ParseError(ln, 1, "unexpected content");
        }
    }

    if (section < 4) throw ParseError(static_cast<int>(lines.size()) + 1, 1,
                                      "missing section [" + section_order[section + 1] + "]");
    if (!have_name) throw ParseError(1, 1, "missing meta key 'name'");
    if (!have_class) throw ParseError(1, 1, "missing meta key 'size_class'");
    if (grid_rows.empty()) throw ParseError(grid_line ? grid_line : 1, 1, "empty grid");
    if (!active_spawn) throw ParseError(static_cast<int>(lines.size()) + 1, 1,
                                        "missing active spawn");
    spec.active_spawn = *active_spawn;

    const int w = static_cast<int>(grid_rows.front().size());
    const int h = static_cast<int>(grid_rows.size());
    spec.grid = TileGrid(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            char ch = grid_rows[y][static_cast<size_t>(x)];
            spec.grid.set({x, y}, ch == '#' ? Tile::Wall : (ch == 'F' ? Tile::Fire : Tile::Floor));
        }

    // Position checks that must hold for the spec to be representable at all.
    for (const auto& e : spec.entities)
        if (!spec.grid.in_bounds(e.position))
            throw ParseError(grid_line, 1, "entity '" + e.id + "' is outside the grid");
    auto check_spawn = [&](Pos p, const std::string& role) {
        if (!spec.grid.in_bounds(p))
            throw ParseError(grid_line, 1, role + " spawn is outside the grid");
        if (spec.grid.at(p) == Tile::Wall)
            throw ParseError(grid_line, 1, role + " spawn is on a Wall tile");
    };
    check_spawn(spec.active_spawn, "active");
    for (Pos p : spec.passive_spawns) check_spawn(p, "passive");

    return spec;
}

std::string serialize_level(const LevelSpec& spec) {
    std::ostringstream out;
    out << "[meta]\n";
    out << "name = " << spec.name << "\n";
    out << "size_class = " << to_string(spec.size_class) << "\n";
    out << "[grid]\n";
    for (int y = 0; y < spec.grid.height(); ++y) {
        for (int x = 0; x < spec.grid.width(); ++x) {
            Tile t = spec.grid.at({x, y});
            out << (t == Tile::Wall ? '#' : (t == Tile::Fire ? 'F' : '.'));
        }
        out << "\n";
    }
    out << "[entities]\n";
    for (const auto& e : spec.entities) {
        std::string kind = e.kind == EntityKind::Button ? "button" : "door";
        kind.resize(6, ' ');
        out << kind << " " << e.id << " " << e.position.x << " " << e.position.y << " "
            << (e.initial_value ? "true" : "false") << "\n";
    }
    out << "[connections]\n";
    for (const auto& c : spec.connections) {
        out << c.button_id << " ->";
        for (size_t i = 0; i < c.door_ids.size(); ++i)
            out << (i == 0 ? " " : ",") << c.door_ids[i];
        out << "\n";
    }
    out << "[spawns]\n";
    out << "active " << spec.active_spawn.x << " " << spec.active_spawn.y << "\n";
    for (Pos p : spec.passive_spawns) out << "passive " << p.x << " " << p.y << "\n";
    return out.str();
}

std::vector<Violation> validate_level(const LevelSpec& spec) {
    std::vector<Violation> out;
    auto err = [&](std::string m) { out.push_back({false, std::move(m)}); };
    auto warn = [&](std::string m) { out.push_back({true, std::move(m)}); };

    const TileGrid& g = spec.grid;
    if (g.width() < 3 || g.height() < 3) err("grid smaller than 3x3");
    for (int x = 0; x < g.width(); ++x) {
        if (!g.is_wall({x, 0})) err("border tile (" + std::to_string(x) + ",0) is not Wall");
        if (!g.is_wall({x, g.height() - 1}))
            err("border tile (" + std::to_string(x) + "," + std::to_string(g.height() - 1) +
                ") is not Wall");
    }
    for (int y = 1; y + 1 < g.height(); ++y) {
        if (!g.is_wall({0, y})) err("border tile (0," + std::to_string(y) + ") is not Wall");
        if (!g.is_wall({g.width() - 1, y}))
            err("border tile (" + std::to_string(g.width() - 1) + "," + std::to_string(y) +
                ") is not Wall");
    }

    std::set<std::string> ids;
    for (const auto& e : spec.entities) {
        if (!ids.insert(e.id).second) err("duplicate entity id '" + e.id + "'");
        if (!g.in_bounds(e.position)) {
            err("entity '" + e.id + "' is outside the grid");
            continue;
        }
        if (g.at(e.position) != Tile::Floor)
            err("entity '" + e.id + "' is not on a Floor tile");
    }

    std::set<std::string> conn_buttons;
    for (const auto& c : spec.connections) {
        const Entity* b = spec.find_entity(c.button_id);
        if (!b)
            err("connection references undeclared button '" + c.button_id + "'");
        else if (b->kind != EntityKind::Button)
            err("connection source '" + c.button_id + "' is not a button");
        if (!conn_buttons.insert(c.button_id).second)
            err("duplicate connection entry for '" + c.button_id + "'");
        std::set<std::string> seen;
        for (const auto& d : c.door_ids) {
            const Entity* de = spec.find_entity(d);
            if (!de)
                err("connection references undeclared door '" + d + "'");
            else if (de->kind != EntityKind::Door)
                err("connection target '" + d + "' is not a door");
            if (!seen.insert(d).second)
                err("duplicate door '" + d + "' in connection for '" + c.button_id + "'");
        }
    }

    auto door_at = [&](Pos p) -> const Entity* {
        for (const auto& e : spec.entities)
            if (e.kind == EntityKind::Door && e.position == p) return &e;
        return nullptr;
    };
    auto check_spawn = [&](Pos p, const std::string& role) {
        if (!g.in_bounds(p)) {
            err(role + " spawn is outside the grid");
            return;
        }
        if (g.at(p) == Tile::Wall) err(role + " spawn is on a Wall tile");
        if (const Entity* d = door_at(p); d && !d->initial_value)
            err(role + " spawn is on closed door '" + d->id + "'");
    };
    check_spawn(spec.active_spawn, "active");
    for (Pos p : spec.passive_spawns) check_spawn(p, "passive");

    // Reachability warning: flood fill from the active spawn with every door
    // treated as open (passable = every non-Wall tile).
    if (g.in_bounds(spec.active_spawn) && g.at(spec.active_spawn) != Tile::Wall) {
        std::vector<uint8_t> seen(static_cast<size_t>(g.width()) * g.height(), 0);
        std::deque<Pos> queue{spec.active_spawn};
        seen[static_cast<size_t>(spec.active_spawn.y) * g.width() + spec.active_spawn.x] = 1;
        while (!queue.empty()) {
            Pos p = queue.front();
            queue.pop_front();
            const Pos nbrs[4] = {{p.x, p.y - 1}, {p.x + 1, p.y}, {p.x, p.y + 1}, {p.x - 1, p.y}};
            for (Pos n : nbrs) {
                if (!g.is_walkable(n)) continue;
                auto& mark = seen[static_cast<size_t>(n.y) * g.width() + n.x];
                if (!mark) {
                    mark = 1;
                    queue.push_back(n);
                }
            }
        }
        auto reached = [&](Pos p) {
            return g.in_bounds(p) && seen[static_cast<size_t>(p.y) * g.width() + p.x];
        };
        for (const auto& e : spec.entities) {
            if (!g.in_bounds(e.position)) continue;
            bool adjacent_ok = reached(e.position);
            if (e.kind == EntityKind::Door) {
                // A door tile itself counts; otherwise any tile next to it.
                for (int dy = -1; dy <= 1 && !adjacent_ok; ++dy)
                    for (int dx = -1; dx <= 1 && !adjacent_ok; ++dx)
                        adjacent_ok = reached({e.position.x + dx, e.position.y + dy});
                if (!adjacent_ok)
                    warn("door '" + e.id + "' is unreachable from the active spawn even with "
                         "all doors open");
            } else if (!adjacent_ok) {
                warn("button '" + e.id + "' is unreachable from the active spawn even with "
                     "all doors open");
            }
        }
    }

    return out;
}

bool is_valid(const std::vector<Violation>& violations) {
    return std::none_of(violations.begin(), violations.end(),
                        [](const Violation& v) { return !v.warning; });
}

}  // namespace covrl
