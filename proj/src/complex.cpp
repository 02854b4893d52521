#include "hopnet/complex.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

namespace hopnet::topo {

CombinatorialComplex build_complex(const SceneFrame& frame, double contact_radius) {
    auto topo = std::make_shared<Topology>();

    int expected_offset = 0;
    for (const auto& mesh : frame.meshes) {
        if (mesh.node_offset != expected_offset)
            throw MalformedMesh("object node ranges must be contiguous and ordered");
        if (mesh.node_count < 3)
            throw MalformedMesh("object " + std::to_string(mesh.object_id) +
                                " has fewer than 3 nodes");
        expected_offset += mesh.node_count;
    }
    if (static_cast<int>(frame.positions.size()) != expected_offset)
        throw MalformedMesh("position array does not match mesh node counts");

    topo->node_count = expected_offset;
    topo->node_object.resize(expected_offset);

    std::map<std::pair<int, int>, int> edge_index; // directed (s, r) -> cell id
    auto add_edge = [&](int s, int r) {
        const auto key = std::make_pair(s, r);
        auto it = edge_index.find(key);
        if (it != edge_index.end()) return it->second;
        const int id = static_cast<int>(topo->edges.size());
        topo->edges.push_back({s, r});
        edge_index.emplace(key, id);
        return id;
    };

    for (const auto& mesh : frame.meshes) {
        const int obj = mesh.object_id;
        for (int i = 0; i < mesh.node_count; ++i)
            topo->node_object[mesh.node_offset + i] = obj;

        std::set<std::array<int, 3>> seen_faces;
        for (const auto& f : mesh.faces) {
            std::array<int, 3> global{};
            for (int v = 0; v < 3; ++v) {
                if (f[v] < 0 || f[v] >= mesh.node_count)
                    throw MalformedMesh("face references node outside its object");
                global[v] = mesh.node_offset + f[v];
            }
            if (global[0] == global[1] || global[1] == global[2] ||
                global[0] == global[2])
                throw MalformedMesh("face with repeated node");
            std::array<int, 3> key = global;
            std::sort(key.begin(), key.end());
            if (!seen_faces.insert(key).second)
                throw MalformedMesh("duplicate face in object " + std::to_string(obj));

            const int face_id = static_cast<int>(topo->faces.size());
            topo->faces.push_back(TriangleRef{obj, global});

            std::vector<int> edge_cells;
            for (int v = 0; v < 3; ++v) {
                const int a = global[v], b = global[(v + 1) % 3];
                edge_cells.push_back(add_edge(a, b));
                edge_cells.push_back(add_edge(b, a));
            }
            std::sort(edge_cells.begin(), edge_cells.end());
            topo->face_edges.push_back(std::move(edge_cells));
            (void)face_id;
        }
    }

    topo->objects.reserve(frame.meshes.size());
    topo->object_faces.resize(frame.meshes.size());
    for (std::size_t m = 0; m < frame.meshes.size(); ++m) {
        const auto& mesh = frame.meshes[m];
        if (mesh.object_id != static_cast<int>(m))
            throw MalformedMesh("object ids must be 0..K-1 in order");
        topo->objects.push_back(
            {mesh.object_id, mesh.node_offset, mesh.node_count, mesh.is_static});
    }
    for (std::size_t f = 0; f < topo->faces.size(); ++f)
        topo->object_faces[topo->faces[f].object_id].push_back(static_cast<int>(f));

    topo->node_edges.resize(topo->node_count);
    for (std::size_t e = 0; e < topo->edges.size(); ++e) {
        topo->node_edges[topo->edges[e].sender].push_back(static_cast<int>(e));
        topo->node_edges[topo->edges[e].receiver].push_back(static_cast<int>(e));
    }
    topo->node_faces.resize(topo->node_count);
    for (std::size_t f = 0; f < topo->faces.size(); ++f)
        for (int v : topo->faces[f].node_ids)
            topo->node_faces[v].push_back(static_cast<int>(f));
    for (auto& l : topo->node_edges) std::sort(l.begin(), l.end());
    for (auto& l : topo->node_faces) std::sort(l.begin(), l.end());

    return CombinatorialComplex(std::move(topo), contact_radius);
}

int CombinatorialComplex::cell_count(int rank) const {
    switch (rank) {
        case 0: return topo_->node_count;
        case 1: return static_cast<int>(topo_->edges.size());
        case 2: return static_cast<int>(topo_->faces.size());
        case 3: return static_cast<int>(contacts_.size());
        case 4: return static_cast<int>(topo_->objects.size());
        default: throw RankOutOfRange("rank must be in [0, 4]");
    }
}

std::vector<int> CombinatorialComplex::cell_nodes(CellRef c) const {
    switch (c.rank) {
        case 0: return {c.index};
        case 1: {
            const auto& e = topo_->edges[c.index];
            std::vector<int> n{e.sender, e.receiver};
            std::sort(n.begin(), n.end());
            return n;
        }
        case 2: {
            const auto& f = topo_->faces[c.index];
            std::vector<int> n(f.node_ids.begin(), f.node_ids.end());
            std::sort(n.begin(), n.end());
            return n;
        }
        case 3: {
            const auto& ct = contacts_[c.index];
            const auto& fs = topo_->faces[ct.sender_face];
            const auto& fr = topo_->faces[ct.receiver_face];
            std::vector<int> n(fs.node_ids.begin(), fs.node_ids.end());
            n.insert(n.end(), fr.node_ids.begin(), fr.node_ids.end());
            std::sort(n.begin(), n.end());
            return n;
        }
        case 4: {
            const auto& o = topo_->objects[c.index];
            std::vector<int> n(o.node_count);
            for (int i = 0; i < o.node_count; ++i) n[i] = o.node_offset + i;
            return n;
        }
        default: throw RankOutOfRange("rank must be in [0, 4]");
    }
}

CombinatorialComplex detect_contacts(const CombinatorialComplex& cc,
                                     const std::vector<Vec3>& positions, double d_c) {
    if (!(d_c > 0.0)) throw OutOfRange("contact radius d_c must be > 0");
    const Topology& topo = cc.topo();
    if (static_cast<int>(positions.size()) != topo.node_count)
        throw LengthMismatch("position array size does not match complex");

    auto face_points = [&](int f) {
        const auto& ids = topo.faces[f].node_ids;
        return std::array<Vec3, 3>{positions[ids[0]], positions[ids[1]],
                                   positions[ids[2]]};
    };

    std::vector<geom::Aabb> boxes;
    boxes.reserve(topo.faces.size());
    for (std::size_t f = 0; f < topo.faces.size(); ++f) {
        const auto pts = face_points(static_cast<int>(f));
        boxes.push_back(geom::Aabb::of_points(pts.data(), 3));
    }

    CombinatorialComplex out(cc.topo_ptr(), d_c);
    for (const auto& [a, b] : geom::aabb_pairs(boxes, d_c)) {
        if (topo.faces[a].object_id == topo.faces[b].object_id) continue;
        const auto res = geom::closest_points(face_points(a), face_points(b));
        if (res.dist < d_c) {
            out.contacts_.push_back({a, b, res.p_s, res.p_r, res.dist});
            out.contacts_.push_back({b, a, res.p_r, res.p_s, res.dist});
        }
    }
    // aabb_pairs already yields (a < b) in lexicographic order, so the
    // contact list order is deterministic.
    out.node_contacts_.resize(topo.node_count);
    for (std::size_t c = 0; c < out.contacts_.size(); ++c) {
        for (int v : topo.faces[out.contacts_[c].sender_face].node_ids)
            out.node_contacts_[v].push_back(static_cast<int>(c));
        for (int v : topo.faces[out.contacts_[c].receiver_face].node_ids)
            out.node_contacts_[v].push_back(static_cast<int>(c));
    }
    return out;
}

namespace {

// Cells of `rank` whose node set includes node v, via the incidence maps.
std::vector<int> cells_at_node(const CombinatorialComplex& cc, int rank, int v) {
    const Topology& topo = cc.topo();
    switch (rank) {
        case 0: return {v};
        case 1: return topo.node_edges[v];
        case 2: return topo.node_faces[v];
        case 3:
            return cc.node_contacts().empty() ? std::vector<int>{}
                                              : cc.node_contacts()[v];
        case 4: return {topo.node_object[v]};
        default: return {};
    }
}

} // namespace

std::vector<CellRef> neighborhood(const CombinatorialComplex& cc, CellRef cell,
                                  Direction dir, int k) {
    if (k < 1) throw RankOutOfRange("neighborhood needs k >= 1");
    if (cell.rank < 0 || cell.rank > 4) throw RankOutOfRange("cell rank out of [0, 4]");
    const int target = cell.rank + (dir == Direction::Up ? k : -k);
    if (target < 0 || target > 4)
        throw RankOutOfRange("neighborhood rank " + std::to_string(target) +
                             " out of [0, 4]");
    if (cell.index < 0 || cell.index >= cc.cell_count(cell.rank))
        throw OutOfRange("cell index out of range");

    const auto own = cc.cell_nodes(cell);
    std::vector<int> candidates;
    if (dir == Direction::Up) {
        // every superset of `own` contains own[0]
        candidates = cells_at_node(cc, target, own[0]);
    } else {
        for (int v : own) {
            const auto lst = cells_at_node(cc, target, v);
            candidates.insert(candidates.end(), lst.begin(), lst.end());
        }
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()),
                         candidates.end());
    }

    std::vector<CellRef> out;
    for (int i : candidates) {
        const CellRef other{target, i};
        const auto nodes = cc.cell_nodes(other);
        const auto& small = (dir == Direction::Up) ? own : nodes;
        const auto& big = (dir == Direction::Up) ? nodes : own;
        if (small.size() >= big.size()) continue; // strict containment only
        if (std::includes(big.begin(), big.end(), small.begin(), small.end()))
            out.push_back(other);
    }
    return out;
}

} // namespace hopnet::topo
