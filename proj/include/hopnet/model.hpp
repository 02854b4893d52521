#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hopnet/features.hpp"
#include "hopnet/rng.hpp"
#include "hopnet/tape.hpp"

namespace hopnet::nn {

/// 2-hidden-layer perceptron (softplus, linear output) with an optional
/// output layer-norm. Doubles as plain tensor storage for gradients.
struct Mlp {
    Mat w1, b1, w2, b2, w3, b3;
    bool has_norm = false;
    Mat gamma, beta;

    static Mlp make(int in, int hidden, int out, bool norm, Rng& rng);
    static Mlp zeros_like(const Mlp& other);
    std::size_t param_count() const;

    template <typename F> void visit(F&& f) {
        f(w1); f(b1); f(w2); f(b2); f(w3); f(b3);
        if (has_norm) { f(gamma); f(beta); }
    }
    template <typename F> void visit(F&& f) const {
        f(w1); f(b1); f(w2); f(b2); f(w3); f(b3);
        if (has_norm) { f(gamma); f(beta); }
    }
};

struct ModelConfig {
    int hidden = 128;
    int repeats = 1; // processor block repetitions, untied weights
    double contact_radius = 0.25;
    bool no_object_cells = false;
    bool no_center_mass_distance = false;
    bool non_sequential = false;

    int node_feature_dim() const { return no_center_mass_distance ? 8 : 16; }
    feat::FeatureFlags feature_flags() const {
        return {no_center_mass_distance};
    }
};

using Gradients = std::map<std::string, Mlp>;

/// All learnable tensors plus the frozen normalizer statistics.
struct ModelParams {
    ModelConfig config;
    std::map<std::string, Mlp> mlps;
    feat::BundleNormalizers input_norm;
    feat::Normalizer target_node{3};
    feat::Normalizer target_object{3};

    static ModelParams init(const ModelConfig& config, std::uint64_t seed);
    std::size_t param_count() const;
    Gradients zero_gradients() const;
};

/// Index arrays extracted from a complex, in the layout the tape ops need.
struct Wiring {
    int n_nodes = 0, n_edges = 0, n_faces = 0, n_contacts = 0, n_objects = 0;
    std::vector<int> face_node_idx, face_node_seg; // 3F
    std::vector<int> face_edge_idx, face_edge_seg; // 6F
    std::vector<int> face_object;                  // F
    std::vector<int> contact_sender, contact_receiver; // C (face ids)
    std::vector<int> node_object;                  // N
    std::vector<double> object_face_inv;           // K: 1/F_k
    std::vector<double> object_node_inv;           // K: 1/N_k

    /// src-cell -> dst-cell incidence with per-dst mean factors, used by the
    /// non-sequential exchange.
    struct Relation {
        std::vector<int> src_idx;
        std::vector<int> dst_seg;
        std::vector<double> dst_inv;
    };
    std::map<std::pair<int, int>, Relation> relations; // (src rank, dst rank)

    static Wiring from(const topo::CombinatorialComplex& cc, bool all_relations);
};

/// A completed forward pass; keeps the tape so gradients can be pulled.
struct Forward {
    Tape tape;
    Tape::Id node_out = -1;
    Tape::Id object_out = -1;

    const Mat& node_accels() const { return tape.value(node_out); }
    const Mat& object_accels() const { return tape.value(object_out); }
};

/// Runs encode -> sequential message passing -> decode on an already
/// normalized bundle. When `grads` is non-null the pass is recorded for
/// backward() and gradients accumulate into it.
Forward forward(const feat::FeatureBundle& normalized_bundle, const Wiring& wiring,
                const ModelParams& params, Gradients* grads);

/// Reverse pass seeded with dLoss/d(node accels) and dLoss/d(object accels).
void backward(Forward& f, const Mat& d_node, const Mat& d_object);

} // namespace hopnet::nn
