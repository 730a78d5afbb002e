#pragma once

// Constellation snapshots and UE -> NF path extraction.
//
// Snapshot file (JSON):
//
//   {
//     "format": "astrotimer-snapshot",       // required
//     "version": 1,                          // required, <= kSnapshotVersion
//     "timestamp": 0.0,                      // optional, seconds
//     "nodes": [                             // required
//       { "id": "ue", "role": "ue",          // required
//         "service_rate": 1e9,               // required, jobs/s
//         "steady_arrival": 0,               // optional, default 0
//         "total_arrival": 0,                // optional, default steady_arrival
//         "burst_window": 0 }                // optional, default 0 s
//     ],
//     "links": [                             // required
//       { "endpoints": ["ue", "sat-1"],      // required
//         "delay_s": 0.0018 }                // or "distance_km": 550 (exactly one)
//     ]
//   }
//
// Roles: ue, leo_satellite, space_gateway, ground_gateway, core_nf.
// Unknown keys are ignored. Links are undirected.

#include <astrotimer/errors.hpp>
#include <astrotimer/timer_model.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace astrotimer {

inline constexpr double kSpeedOfLightKmPerSecond = 299792.458;
inline constexpr int kSnapshotVersion = 1;

enum class NodeRole { UE, LeoSatellite, SpaceGateway, GroundGateway, CoreNF };

struct NetworkNode {
    std::string id;
    NodeRole role = NodeRole::LeoSatellite;
    NodeLoadProfile load;
};

struct LinkDelay {
    Seconds seconds = 0.0;
};
struct LinkDistance {
    double kilometers = 0.0;
};

struct NetworkLink {
    std::pair<std::string, std::string> endpoints;
    std::variant<LinkDelay, LinkDistance> delay_spec;
};

struct ConstellationSnapshot {
    std::vector<NetworkNode> nodes;
    std::vector<NetworkLink> links;
    Seconds timestamp = 0.0;
};

/// A path plus the snapshot ids of its nodes, origin first.
struct RoutedPath {
    PathSpec path;
    std::vector<std::string> node_ids;

    Seconds propagation_delay() const {
        Seconds total = 0.0;
        for (Seconds d : path.link_delays) total += d;
        return total;
    }
};

inline Seconds prop_delay_from_distance(double kilometers) {
    if (!(std::isfinite(kilometers) && kilometers > 0.0))
        throw InputError("link distance must be finite and > 0 km");
    return kilometers / kSpeedOfLightKmPerSecond;
}

inline Seconds link_delay(const NetworkLink& link) {
    if (const auto* d = std::get_if<LinkDelay>(&link.delay_spec)) {
        if (!(std::isfinite(d->seconds) && d->seconds > 0.0))
            throw InputError("link " + link.endpoints.first + "-" + link.endpoints.second +
                             ": delay must be finite and > 0 s");
        return d->seconds;
    }
    return prop_delay_from_distance(std::get<LinkDistance>(link.delay_spec).kilometers);
}

namespace detail {

struct Graph {
    std::vector<std::string> ids;  // sorted, so index order is lexicographic id order
    std::vector<const NetworkNode*> nodes;
    std::vector<std::vector<std::pair<std::size_t, Seconds>>> adjacency;  // sorted by neighbour

    std::size_t index_of(const std::string& id) const {
        const auto it = std::lower_bound(ids.begin(), ids.end(), id);
        if (it == ids.end() || *it != id) throw InputError("unknown node id '" + id + "'");
        return static_cast<std::size_t>(it - ids.begin());
    }
};

inline Graph build_graph(const ConstellationSnapshot& snapshot) {
    Graph g;
    std::map<std::string, const NetworkNode*> by_id;
    for (const auto& node : snapshot.nodes) {
        if (!by_id.emplace(node.id, &node).second) throw InputError("duplicate node id '" + node.id + "'");
    }
    for (const auto& [id, node] : by_id) {
        g.ids.push_back(id);
        g.nodes.push_back(node);
    }
    std::vector<std::map<std::size_t, Seconds>> best(g.ids.size());
    for (const auto& link : snapshot.links) {
        const auto& [a, b] = link.endpoints;
        if (a == b) throw InputError("link endpoints must be distinct ('" + a + "')");
        const std::size_t ia = g.index_of(a);
        const std::size_t ib = g.index_of(b);
        const Seconds d = link_delay(link);
        for (auto [from, to] : {std::pair{ia, ib}, std::pair{ib, ia}}) {
            auto [it, inserted] = best[from].emplace(to, d);
            if (!inserted) it->second = std::min(it->second, d);
        }
    }
    g.adjacency.resize(g.ids.size());
    for (std::size_t i = 0; i < best.size(); ++i)
        g.adjacency[i].assign(best[i].begin(), best[i].end());
    return g;
}

/// Single-source shortest propagation delay.
inline std::vector<Seconds> dijkstra(const Graph& g, std::size_t source) {
    constexpr Seconds inf = std::numeric_limits<Seconds>::infinity();
    std::vector<Seconds> dist(g.ids.size(), inf);
    using Item = std::pair<Seconds, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
    dist[source] = 0.0;
    frontier.emplace(0.0, source);
    while (!frontier.empty()) {
        const auto [d, u] = frontier.top();
        frontier.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, w] : g.adjacency[u]) {
            if (d + w < dist[v]) {
                dist[v] = d + w;
                frontier.emplace(dist[v], v);
            }
        }
    }
    return dist;
}

}  // namespace detail

/// Minimum-propagation-delay route from origin to responder. Among equal-delay
/// routes the one whose id sequence is lexicographically smallest wins.
inline RoutedPath build_path(const ConstellationSnapshot& snapshot, const std::string& origin,
                             const std::string& responder) {
    const detail::Graph g = detail::build_graph(snapshot);
    const std::size_t src = g.index_of(origin);
    const std::size_t dst = g.index_of(responder);
    if (src == dst) throw InputError("origin and responder must differ");

    // Distances to the responder; the walk from the origin then only follows
    // edges that stay on some shortest route, taking the smallest id first.
    const std::vector<Seconds> to_dst = detail::dijkstra(g, dst);
    if (!std::isfinite(to_dst[src]))
        throw DisconnectedError("no route from '" + origin + "' to '" + responder + "'");

    RoutedPath out;
    std::size_t u = src;
    out.node_ids.push_back(g.ids[u]);
    out.path.nodes.push_back(g.nodes[u]->load);
    while (u != dst) {
        std::optional<std::pair<std::size_t, Seconds>> next;
        for (const auto& [v, w] : g.adjacency[u]) {
            if (!(to_dst[v] < to_dst[u])) continue;
            const double slack = std::abs(w + to_dst[v] - to_dst[u]);
            if (slack <= 1e-12 * std::max(1.0, to_dst[u])) {
                next.emplace(v, w);
                break;
            }
        }
        if (!next) throw DisconnectedError("route reconstruction failed at '" + g.ids[u] + "'");
        u = next->first;
        out.node_ids.push_back(g.ids[u]);
        out.path.nodes.push_back(g.nodes[u]->load);
        out.path.link_delays.push_back(next->second);
    }
    return out;
}

/// Uniform chain: origin, n_hops - 1 identical relays, responder.
inline PathSpec synth_path(std::size_t n_hops, Seconds link_delay, const NodeLoadProfile& hop_profile,
                           const NodeLoadProfile& origin, const NodeLoadProfile& responder) {
    if (n_hops == 0) throw InputError("n_hops must be >= 1");
    PathSpec path;
    path.nodes.reserve(n_hops + 1);
    path.nodes.push_back(origin);
    path.nodes.insert(path.nodes.end(), n_hops - 1, hop_profile);
    path.nodes.push_back(responder);
    path.link_delays.assign(n_hops, link_delay);
    return path;
}

// ---------------------------------------------------------------------------
// Snapshot I/O

inline std::string_view to_string(NodeRole role) noexcept {
    switch (role) {
        case NodeRole::UE: return "ue";
        case NodeRole::LeoSatellite: return "leo_satellite";
        case NodeRole::SpaceGateway: return "space_gateway";
        case NodeRole::GroundGateway: return "ground_gateway";
        case NodeRole::CoreNF: return "core_nf";
    }
    return "unknown";
}

inline NodeRole parse_role(const std::string& text) {
    for (NodeRole r : {NodeRole::UE, NodeRole::LeoSatellite, NodeRole::SpaceGateway, NodeRole::GroundGateway,
                       NodeRole::CoreNF}) {
        if (text == to_string(r)) return r;
    }
    throw InputError("unknown node role '" + text + "'");
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw InputError(where + ": missing required field '" + key + "'");
    return obj.at(key);
}

inline double number(const nlohmann::json& v, const std::string& what) {
    if (!v.is_number()) throw InputError(what + " must be a number");
    return v.get<double>();
}

}  // namespace detail

inline ConstellationSnapshot parse_snapshot(const nlohmann::json& doc) {
    using detail::number;
    using detail::require;
    if (require(doc, "format", "snapshot") != "astrotimer-snapshot")
        throw InputError("snapshot: format must be 'astrotimer-snapshot'");
    const auto& version = require(doc, "version", "snapshot");
    if (!version.is_number_integer() || version.get<int>() < 1 || version.get<int>() > kSnapshotVersion)
        throw InputError("snapshot: unsupported version " + version.dump());

    ConstellationSnapshot snap;
    if (doc.contains("timestamp")) snap.timestamp = number(doc["timestamp"], "snapshot.timestamp");

    const auto& nodes = require(doc, "nodes", "snapshot");
    if (!nodes.is_array()) throw InputError("snapshot.nodes must be an array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        const std::string where = "snapshot.nodes[" + std::to_string(i) + "]";
        NetworkNode node;
        const auto& id = require(n, "id", where);
        if (!id.is_string()) throw InputError(where + ".id must be a string");
        node.id = id.get<std::string>();
        const auto& role = require(n, "role", where);
        if (!role.is_string()) throw InputError(where + ".role must be a string");
        node.role = parse_role(role.get<std::string>());
        node.load.service_rate = number(require(n, "service_rate", where), where + ".service_rate");
        node.load.steady_arrival = n.contains("steady_arrival") ? number(n["steady_arrival"], where) : 0.0;
        node.load.total_arrival =
            n.contains("total_arrival") ? number(n["total_arrival"], where) : node.load.steady_arrival;
        node.load.burst_window = n.contains("burst_window") ? number(n["burst_window"], where) : 0.0;
        validate(node.load, i);
        snap.nodes.push_back(std::move(node));
    }

    const auto& links = require(doc, "links", "snapshot");
    if (!links.is_array()) throw InputError("snapshot.links must be an array");
    for (std::size_t i = 0; i < links.size(); ++i) {
        const auto& l = links[i];
        const std::string where = "snapshot.links[" + std::to_string(i) + "]";
        const auto& ends = require(l, "endpoints", where);
        if (!ends.is_array() || ends.size() != 2 || !ends[0].is_string() || !ends[1].is_string())
            throw InputError(where + ".endpoints must be two node ids");
        NetworkLink link;
        link.endpoints = {ends[0].get<std::string>(), ends[1].get<std::string>()};
        const bool has_delay = l.contains("delay_s");
        const bool has_distance = l.contains("distance_km");
        if (has_delay == has_distance) throw InputError(where + ": give exactly one of delay_s, distance_km");
        if (has_delay)
            link.delay_spec = LinkDelay{number(l["delay_s"], where + ".delay_s")};
        else
            link.delay_spec = LinkDistance{number(l["distance_km"], where + ".distance_km")};
        link_delay(link);
        snap.links.push_back(std::move(link));
    }
    detail::build_graph(snap);  // endpoint and uniqueness checks
    return snap;
}

inline ConstellationSnapshot load_snapshot(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot open snapshot '" + file.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("snapshot '" + file.string() + "': " + e.what());
    }
    return parse_snapshot(doc);
}

inline nlohmann::json to_json(const ConstellationSnapshot& snap) {
    nlohmann::json doc = {{"format", "astrotimer-snapshot"}, {"version", kSnapshotVersion},
                          {"timestamp", snap.timestamp}};
    auto& nodes = doc["nodes"] = nlohmann::json::array();
    for (const auto& n : snap.nodes) {
        nodes.push_back({{"id", n.id},
                         {"role", to_string(n.role)},
                         {"service_rate", n.load.service_rate},
                         {"steady_arrival", n.load.steady_arrival},
                         {"total_arrival", n.load.total_arrival},
                         {"burst_window", n.load.burst_window}});
    }
    auto& links = doc["links"] = nlohmann::json::array();
    for (const auto& l : snap.links) {
        nlohmann::json j = {{"endpoints", {l.endpoints.first, l.endpoints.second}}};
        if (const auto* d = std::get_if<LinkDelay>(&l.delay_spec))
            j["delay_s"] = d->seconds;
        else
            j["distance_km"] = std::get<LinkDistance>(l.delay_spec).kilometers;
        links.push_back(std::move(j));
    }
    return doc;
}

}  // namespace astrotimer
