#pragma once

#include <memory>
#include <vector>

#include "hopnet/geometry.hpp"

namespace hopnet::topo {

using geom::TriangleRef;
using geom::Vec3;

/// One object's triangular surface mesh, with node ids in a contiguous
/// global range [node_offset, node_offset + node_count).
struct ObjectMesh {
    int object_id = -1;
    int node_offset = 0;
    int node_count = 0;
    std::vector<std::array<int, 3>> faces; // local node indices
    bool is_static = false;
};

/// Scene snapshot handed to build_complex: topology plus node positions.
struct SceneFrame {
    std::vector<ObjectMesh> meshes;
    std::vector<Vec3> positions; // global node array
};

/// Directed mesh edge (rank-1 cell).
struct EdgeCell {
    int sender = -1;
    int receiver = -1;
};

/// Directed collision contact (rank-3 cell): a sender and a receiver
/// triangle from different objects, plus the closest-point data computed
/// when the contact was created.
struct ContactCell {
    int sender_face = -1;
    int receiver_face = -1;
    Vec3 p_sender, p_receiver;
    double dist = 0.0;
};

/// Object cell (rank 4).
struct ObjectCell {
    int object_id = -1;
    int node_offset = 0;
    int node_count = 0;
    bool is_static = false;
};

enum class Direction { Up, Down };

/// Generic view of a cell for neighborhood queries.
struct CellRef {
    int rank = -1;
    int index = -1; // index within its rank's list
    bool operator==(const CellRef&) const = default;
    auto operator<=>(const CellRef&) const = default;
};

/// Immutable per-scene topology (ranks 0, 1, 2, 4). Shared by all frames of
/// a trajectory; contacts live in the per-frame CombinatorialComplex.
struct Topology {
    int node_count = 0;
    std::vector<int> node_object;          // rank-0 cell -> object id
    std::vector<EdgeCell> edges;           // rank-1 cells, directed
    std::vector<TriangleRef> faces;        // rank-2 cells
    std::vector<ObjectCell> objects;       // rank-4 cells
    std::vector<std::vector<int>> object_faces; // object id -> face indices
    std::vector<std::vector<int>> face_edges;   // face -> its 6 directed edge cells
    // incidence maps, sorted ascending
    std::vector<std::vector<int>> node_edges; // node -> directed edge cells
    std::vector<std::vector<int>> node_faces; // node -> faces
};

/// The combinatorial complex X^t: shared topology + the frame's rank-3
/// contact cells. Immutable once built.
class CombinatorialComplex {
  public:
    CombinatorialComplex(std::shared_ptr<const Topology> topo, double contact_radius)
        : topo_(std::move(topo)), contact_radius_(contact_radius) {}

    const Topology& topo() const { return *topo_; }
    std::shared_ptr<const Topology> topo_ptr() const { return topo_; }
    double contact_radius() const { return contact_radius_; }
    const std::vector<ContactCell>& contacts() const { return contacts_; }
    /// node -> contact cells whose node set includes the node (sorted).
    const std::vector<std::vector<int>>& node_contacts() const { return node_contacts_; }

    int cell_count(int rank) const;
    /// Sorted node set of a cell (directed cells report their node set).
    std::vector<int> cell_nodes(CellRef c) const;

    friend CombinatorialComplex detect_contacts(const CombinatorialComplex& cc,
                                                const std::vector<Vec3>& positions,
                                                double d_c);

  private:
    std::shared_ptr<const Topology> topo_;
    double contact_radius_ = 0.0;
    std::vector<ContactCell> contacts_;
    std::vector<std::vector<int>> node_contacts_;
};

/// Build the rank-0/1/2/4 cells from a scene frame. Throws MalformedMesh on
/// dangling node indices, duplicate faces, or objects with < 3 nodes.
CombinatorialComplex build_complex(const SceneFrame& frame, double contact_radius);

/// Create the frame's directed rank-3 contact cells: for every triangle pair
/// from distinct objects whose closest-point distance is < d_c, both
/// directions are added. Broadphase uses aabb_pairs with margin d_c.
CombinatorialComplex detect_contacts(const CombinatorialComplex& cc,
                                     const std::vector<Vec3>& positions, double d_c);

/// k-up / k-down neighborhood by strict node-set containment; directed cells
/// are matched on node set and returned individually.
std::vector<CellRef> neighborhood(const CombinatorialComplex& cc, CellRef cell,
                                  Direction dir, int k);

} // namespace hopnet::topo
