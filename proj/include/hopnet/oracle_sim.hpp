#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hopnet/geometry.hpp"

namespace hopnet::sim {

using geom::Quat;
using geom::Vec3;

enum class ShapeKind : std::uint8_t { Sphere = 0, Box = 1, Floor = 2 };

struct Mesh {
    std::vector<Vec3> nodes;
    std::vector<std::array<int, 3>> faces;
};

/// Icosphere; subdivision 0 is the raw icosahedron (12 nodes), 1 gives 42.
Mesh make_icosphere(double radius, int subdivision);
/// Axis-aligned box surface grid; subdivision 0 is the plain cube (8 nodes),
/// 1 gives the 26-node 3x3x3 shell.
Mesh make_box(const Vec3& half_extents, int subdivision);
/// Flat z=0 sheet of tiles x tiles quads (two triangles each) covering
/// [-half_size, half_size]^2.
Mesh make_floor(double half_size, int tiles);

struct ObjectSpec {
    ShapeKind kind = ShapeKind::Sphere;
    double radius = 0.1;       // sphere
    Vec3 half_extents{0.1, 0.1, 0.1}; // box
    int subdivision = 1;
    double mass = 1.0;
    double friction = 0.5;
    double restitution = 0.5;
    bool is_static = false;
    Mesh canonical; // centered on the node mean

    double inv_mass() const { return is_static ? 0.0 : 1.0 / mass; }
    /// Diagonal of the body-frame inverse inertia (analytic, zero if static).
    Vec3 inv_inertia_body() const;
    /// Radius of the bounding sphere around the canonical mesh.
    double bounding_radius() const;
};

struct BodyState {
    Vec3 pos;
    Quat orientation;
    Vec3 vel;   // m/step
    Vec3 omega; // rad/step, world frame
};

struct SimState {
    std::vector<BodyState> bodies;
    Vec3 gravity{0.0, 0.0, -0.0098}; // m/step^2
    double speed_cap = 5.0;          // NumericalBlowup threshold, m/step
    long step_count = 0;
};

/// Scene generation knobs (desk scale defaults).
struct SceneConfig {
    int object_count_min = 2;
    int object_count_max = 6;
    double size_min = 0.12;
    double size_max = 0.30;
    double mass_min = 0.5;
    double mass_max = 2.0;
    double friction_min = 0.0;
    double friction_max = 1.0;
    double restitution_min = 0.3;
    double restitution_max = 0.9;
    double speed_max = 0.08;  // initial |v| per axis, m/step
    double omega_max = 0.05;  // initial |w| per axis, rad/step
    double spawn_half_extent = 1.2;
    double spawn_height_min = 0.4;
    double spawn_height_max = 1.6;
    double sphere_fraction = 0.7;
    int sphere_subdivision = 1;
    int box_subdivision = 1;
    double floor_half_size = 20.0;
    int floor_tiles = 10;
    Vec3 gravity{0.0, 0.0, -0.0098};
    double speed_cap = 5.0;
    int placement_attempts = 1000;
};

struct Pose {
    Vec3 pos;
    Quat orientation;
};

struct Trajectory {
    std::uint32_t version = 1;
    std::uint64_t seed = 0;
    std::vector<ObjectSpec> specs;
    std::vector<std::vector<Pose>> frames; // frame -> object -> pose

    int object_count() const { return static_cast<int>(specs.size()); }
    int frame_count() const { return static_cast<int>(frames.size()); }
    /// World-space node positions of one frame (global node array).
    std::vector<Vec3> frame_positions(int frame) const;
    int total_nodes() const;
};

/// Reproducible scene: floor as static object 0, then 2..6 dynamic bodies
/// placed without interpenetration (rejection sampling).
std::pair<std::vector<ObjectSpec>, SimState> generate_scene(std::uint64_t seed,
                                                            const SceneConfig& cfg);

/// One simulation step: gravity, speculative sequential impulses (10 fixed
/// iterations), integration, positional projection, energy guard.
SimState step(const SimState& state, const std::vector<ObjectSpec>& specs);

/// Total mechanical energy of the dynamic bodies.
double total_energy(const SimState& state, const std::vector<ObjectSpec>& specs);

/// steps+2 recorded frames: a constant-velocity history prefix frame, the
/// initial state, then one frame per step.
Trajectory simulate_trajectory(std::uint64_t seed, const SceneConfig& cfg, int steps);

/// Node positions for an arbitrary set of poses (same object table).
std::vector<Vec3> pose_positions(const std::vector<ObjectSpec>& specs,
                                 const std::vector<Pose>& poses);

} // namespace hopnet::sim
