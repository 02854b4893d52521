#pragma once

#include <vector>

#include "hopnet/complex.hpp"
#include "hopnet/mat.hpp"

namespace hopnet::feat {

using geom::Quat;
using geom::Vec3;
using topo::CombinatorialComplex;

/// One time slice: node positions plus derived per-object centers and the
/// objects' orientations.
struct Frame {
    std::vector<Vec3> positions;
    std::vector<Vec3> centers;
    std::vector<Quat> orientations;
};

/// Positional history the features are built from: the trajectory-fixed
/// reference frame t0 and the sliding window (t-2, t-1, t). When no t-2
/// frame exists the window is backfilled at constant velocity.
struct FrameHistory {
    Frame reference; // t0
    Frame prev2;     // t-2
    Frame prev;      // t-1
    Frame curr;      // t

    /// Backfills prev2 = 2*prev - curr so the t-1 velocity equals the t one.
    static FrameHistory from_two_frames(Frame reference, Frame prev, Frame curr);
};

/// Per-object scalar physics handed to the object features.
struct ObjectParams {
    double mass = 1.0;
    double friction = 0.5;
    double restitution = 0.5;
    bool is_static = false;
};

struct FeatureFlags {
    bool no_center_mass_distance = false;
};

/// Raw per-rank feature matrices.
struct FeatureBundle {
    Mat node;    // N x 16 (N x 8 with no_center_mass_distance)
    Mat edge;    // E x 8
    Mat face;    // F x 4
    Mat contact; // C x 28
    Mat object;  // K x 13
    Mat virtual_node; // K x node-dim, used only by the no-object-cells model
};

/// Mean of the object's node positions (the object center convention).
std::vector<Vec3> object_centers(const std::vector<Vec3>& positions,
                                 const topo::Topology& topo);

Mat node_features(const FrameHistory& h, const CombinatorialComplex& cc,
                  const FeatureFlags& flags = {});
Mat edge_features(const FrameHistory& h, const CombinatorialComplex& cc);
Mat face_features(const FrameHistory& h, const CombinatorialComplex& cc);
Mat contact_features(const FrameHistory& h, const CombinatorialComplex& cc);
Mat object_features(const FrameHistory& h, const CombinatorialComplex& cc,
                    const std::vector<ObjectParams>& params);
Mat virtual_node_features(const FrameHistory& h, const CombinatorialComplex& cc,
                          const FeatureFlags& flags = {});

FeatureBundle build_bundle(const FrameHistory& h, const CombinatorialComplex& cc,
                           const std::vector<ObjectParams>& params,
                           const FeatureFlags& flags = {});

/// Running per-channel mean/variance with epsilon-guarded scaling.
class Normalizer {
  public:
    Normalizer() = default;
    explicit Normalizer(int dim)
        : dim_(dim), mean_(dim, 0.0), m2_(dim, 0.0) {}

    /// A pass-through normalizer (mean 0, variance 1).
    static Normalizer identity(int dim);

    int dim() const { return dim_; }
    double count() const { return count_; }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& m2() const { return m2_; }
    std::vector<double> variance() const;

    void observe(const Mat& rows);
    Mat normalize(const Mat& rows) const;
    Mat denormalize(const Mat& rows) const;

    void set_state(double count, std::vector<double> mean, std::vector<double> m2);

    static constexpr double kEps = 1e-8;

  private:
    int dim_ = 0;
    double count_ = 0.0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// Normalizers for every raw feature rank (virtual nodes share the node one).
struct BundleNormalizers {
    Normalizer node, edge, face, contact, object;
    /// Fold virtual-node rows into the node statistics (set by models that
    /// route object state through virtual center nodes).
    bool observe_virtual = false;

    static BundleNormalizers for_flags(const FeatureFlags& flags);
    void observe(const FeatureBundle& b);
};

/// (x - mean)/sqrt(var + eps) per channel; statistics updated first when
/// `update` is set.
FeatureBundle normalize(const FeatureBundle& b, BundleNormalizers& norms,
                        bool update);

} // namespace hopnet::feat
