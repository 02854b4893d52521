#include "hopnet/model.hpp"

#include <algorithm>
#include <cmath>

namespace hopnet::nn {

namespace {

Mat glorot(int rows, int cols, Rng& rng) {
    Mat m(rows, cols);
    const double s = std::sqrt(6.0 / (rows + cols));
    for (auto& v : m.d) v = rng.uniform(-s, s);
    return m;
}

} // namespace

Mlp Mlp::make(int in, int hidden, int out, bool norm, Rng& rng) {
    Mlp m;
    m.w1 = glorot(in, hidden, rng);
    m.b1 = Mat(1, hidden);
    m.w2 = glorot(hidden, hidden, rng);
    m.b2 = Mat(1, hidden);
    m.w3 = glorot(hidden, out, rng);
    m.b3 = Mat(1, out);
    m.has_norm = norm;
    if (norm) {
        m.gamma = Mat(1, out);
        std::fill(m.gamma.d.begin(), m.gamma.d.end(), 1.0);
        m.beta = Mat(1, out);
    }
    return m;
}

Mlp Mlp::zeros_like(const Mlp& other) {
    Mlp m;
    m.w1 = Mat(other.w1.rows, other.w1.cols);
    m.b1 = Mat(other.b1.rows, other.b1.cols);
    m.w2 = Mat(other.w2.rows, other.w2.cols);
    m.b2 = Mat(other.b2.rows, other.b2.cols);
    m.w3 = Mat(other.w3.rows, other.w3.cols);
    m.b3 = Mat(other.b3.rows, other.b3.cols);
    m.has_norm = other.has_norm;
    if (m.has_norm) {
        m.gamma = Mat(other.gamma.rows, other.gamma.cols);
        m.beta = Mat(other.beta.rows, other.beta.cols);
    }
    return m;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    visit([&n](const Mat& m) { n += m.d.size(); });
    return n;
}

namespace {

// Relation degrees used by the non-sequential exchange: for each dst rank,
// the src ranks it hears from (every nonempty containment relation).
const std::vector<std::pair<int, int>> kAllRelations = {
    {1, 0}, {2, 0}, {3, 0}, {4, 0}, // into nodes
    {0, 1}, {2, 1}, {3, 1}, {4, 1}, // into edges
    {0, 2}, {1, 2}, {3, 2}, {4, 2}, // into faces
    {0, 3}, {1, 3}, {2, 3},         // into contacts
    {0, 4}, {1, 4}, {2, 4},         // into objects
};

std::vector<int> sources_of(int dst) {
    std::vector<int> out;
    for (const auto& [s, d] : kAllRelations)
        if (d == dst) out.push_back(s);
    return out;
}

} // namespace

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
    if (config.hidden < 1 || config.repeats < 1)
        throw ConfigError("hidden width and repeats must be >= 1");
    if (config.no_object_cells && config.non_sequential)
        throw ConfigError("no_object_cells and non_sequential are mutually exclusive");

    ModelParams p;
    p.config = config;
    p.input_norm = feat::BundleNormalizers::for_flags(config.feature_flags());
    p.input_norm.observe_virtual = config.no_object_cells;
    p.target_node = feat::Normalizer(3);
    p.target_object = feat::Normalizer(3);

    Rng rng(seed);
    const int H = config.hidden;
    auto add = [&](const std::string& name, int in, int out, bool norm) {
        p.mlps.emplace(name, Mlp::make(in, H, out, norm, rng));
    };

    add("enc_node", config.node_feature_dim(), H, false);
    add("enc_edge", 8, H, false);
    add("enc_face", 4, H, false);
    add("enc_contact", 28, H, false);
    if (!config.no_object_cells) add("enc_object", 13, H, false);

    for (int r = 0; r < config.repeats; ++r) {
        const std::string pre = "r" + std::to_string(r) + ".";
        if (config.non_sequential) {
            for (const auto& [src, dst] : kAllRelations)
                add(pre + "ns_msg_" + std::to_string(src) + "to" + std::to_string(dst),
                    H, H, true);
            for (int rank = 0; rank < 5; ++rank)
                add(pre + "ns_upd_" + std::to_string(rank),
                    H * (1 + static_cast<int>(sources_of(rank).size())), H, true);
        } else {
            add(pre + "msg_node_face", H, H, true);
            add(pre + "msg_edge_face", H, H, true);
            if (!config.no_object_cells) add(pre + "msg_object_face", H, H, true);
            add(pre + "upd_face", H * (config.no_object_cells ? 3 : 4), H, true);
            add(pre + "msg_face_contact", H, H, true);
            add(pre + "upd_contact", H * 3, H, true);
            add(pre + "upd_face_collision", H * 2, H, true);
            add(pre + "msg_face_object", H, H, true);
            add(pre + "upd_object", H * 2, H, true);
            add(pre + "msg_node_object", H, H, true);
            add(pre + "msg_object_node", H, H, true);
            add(pre + "upd_node", H * 2, H, true);
            add(pre + "upd_object_final", H * 2, H, true);
        }
    }

    add("dec_node", H, 3, false);
    add("dec_object", H, 3, false);
    return p;
}

std::size_t ModelParams::param_count() const {
    std::size_t n = 0;
    for (const auto& [name, mlp] : mlps) n += mlp.param_count();
    return n;
}

Gradients ModelParams::zero_gradients() const {
    Gradients g;
    for (const auto& [name, mlp] : mlps) g.emplace(name, Mlp::zeros_like(mlp));
    return g;
}

Wiring Wiring::from(const topo::CombinatorialComplex& cc, bool all_relations) {
    const auto& topo = cc.topo();
    Wiring w;
    w.n_nodes = topo.node_count;
    w.n_edges = static_cast<int>(topo.edges.size());
    w.n_faces = static_cast<int>(topo.faces.size());
    w.n_contacts = static_cast<int>(cc.contacts().size());
    w.n_objects = static_cast<int>(topo.objects.size());

    for (int f = 0; f < w.n_faces; ++f) {
        for (int v : topo.faces[f].node_ids) {
            w.face_node_idx.push_back(v);
            w.face_node_seg.push_back(f);
        }
        for (int e : topo.face_edges[f]) {
            w.face_edge_idx.push_back(e);
            w.face_edge_seg.push_back(f);
        }
        w.face_object.push_back(topo.faces[f].object_id);
    }
    for (const auto& ct : cc.contacts()) {
        w.contact_sender.push_back(ct.sender_face);
        w.contact_receiver.push_back(ct.receiver_face);
    }
    w.node_object = topo.node_object;

    w.object_face_inv.assign(w.n_objects, 0.0);
    w.object_node_inv.assign(w.n_objects, 0.0);
    for (const auto& obj : topo.objects) {
        const auto faces = topo.object_faces[obj.object_id].size();
        if (faces > 0) w.object_face_inv[obj.object_id] = 1.0 / static_cast<double>(faces);
        if (obj.node_count > 0)
            w.object_node_inv[obj.object_id] = 1.0 / static_cast<double>(obj.node_count);
    }

    if (all_relations) {
        for (const auto& key : kAllRelations) w.relations[key]; // ensure present
        auto add_pair = [&](int src_rank, int dst_rank, int src, int dst) {
            w.relations[{src_rank, dst_rank}].src_idx.push_back(src);
            w.relations[{src_rank, dst_rank}].dst_seg.push_back(dst);
        };
        for (int e = 0; e < w.n_edges; ++e) {
            add_pair(0, 1, topo.edges[e].sender, e);
            add_pair(0, 1, topo.edges[e].receiver, e);
            add_pair(1, 0, e, topo.edges[e].sender);
            add_pair(1, 0, e, topo.edges[e].receiver);
            add_pair(1, 4, e, topo.node_object[topo.edges[e].sender]);
            add_pair(4, 1, topo.node_object[topo.edges[e].sender], e);
        }
        for (int f = 0; f < w.n_faces; ++f) {
            for (int v : topo.faces[f].node_ids) {
                add_pair(0, 2, v, f);
                add_pair(2, 0, f, v);
            }
            for (int e : topo.face_edges[f]) {
                add_pair(1, 2, e, f);
                add_pair(2, 1, f, e);
            }
            add_pair(2, 4, f, w.face_object[f]);
            add_pair(4, 2, w.face_object[f], f);
        }
        for (int i = 0; i < w.n_nodes; ++i) {
            add_pair(0, 4, i, w.node_object[i]);
            add_pair(4, 0, w.node_object[i], i);
        }
        for (int c = 0; c < w.n_contacts; ++c) {
            const auto& ct = cc.contacts()[c];
            for (int f : {ct.sender_face, ct.receiver_face}) {
                add_pair(2, 3, f, c);
                add_pair(3, 2, c, f);
                for (int v : topo.faces[f].node_ids) {
                    add_pair(0, 3, v, c);
                    add_pair(3, 0, c, v);
                }
                for (int e : topo.face_edges[f]) {
                    add_pair(1, 3, e, c);
                    add_pair(3, 1, c, e);
                }
            }
        }
        const int counts[5] = {w.n_nodes, w.n_edges, w.n_faces, w.n_contacts,
                               w.n_objects};
        for (auto& [key, rel] : w.relations) {
            std::vector<int> fan(counts[key.second], 0);
            for (int d : rel.dst_seg) fan[d]++;
            rel.dst_inv.resize(fan.size());
            for (std::size_t i = 0; i < fan.size(); ++i)
                rel.dst_inv[i] = fan[i] > 0 ? 1.0 / fan[i] : 0.0;
        }
    }
    return w;
}

namespace {

struct MlpIds {
    Tape::Id w1, b1, w2, b2, w3, b3, gamma = -1, beta = -1;
    bool has_norm = false;
};

class Builder {
  public:
    Builder(Tape& tape, const ModelParams& params, Gradients* grads)
        : tape_(tape), params_(params), grads_(grads) {}

    Tape::Id apply(const std::string& name, Tape::Id x) {
        const auto ids = bind(name);
        Tape::Id z = tape_.softplus(tape_.linear(x, ids.w1, ids.b1));
        z = tape_.softplus(tape_.linear(z, ids.w2, ids.b2));
        z = tape_.linear(z, ids.w3, ids.b3);
        if (ids.has_norm) z = tape_.layer_norm(z, ids.gamma, ids.beta);
        return z;
    }

  private:
    MlpIds bind(const std::string& name) {
        auto it = params_.mlps.find(name);
        if (it == params_.mlps.end())
            throw ShapeMismatch("model has no MLP named " + name);
        const Mlp& p = it->second;
        Mlp* g = nullptr;
        if (grads_) g = &grads_->at(name);
        MlpIds ids;
        ids.w1 = tape_.param(&p.w1, g ? &g->w1 : nullptr);
        ids.b1 = tape_.param(&p.b1, g ? &g->b1 : nullptr);
        ids.w2 = tape_.param(&p.w2, g ? &g->w2 : nullptr);
        ids.b2 = tape_.param(&p.b2, g ? &g->b2 : nullptr);
        ids.w3 = tape_.param(&p.w3, g ? &g->w3 : nullptr);
        ids.b3 = tape_.param(&p.b3, g ? &g->b3 : nullptr);
        ids.has_norm = p.has_norm;
        if (p.has_norm) {
            ids.gamma = tape_.param(&p.gamma, g ? &g->gamma : nullptr);
            ids.beta = tape_.param(&p.beta, g ? &g->beta : nullptr);
        }
        return ids;
    }

    Tape& tape_;
    const ModelParams& params_;
    Gradients* grads_;
};

} // namespace

Forward forward(const feat::FeatureBundle& nb, const Wiring& w,
                const ModelParams& params, Gradients* grads) {
    const auto& cfg = params.config;
    Forward f;
    Tape& t = f.tape;
    Builder mlp(t, params, grads);

    Tape::Id h0 = mlp.apply("enc_node", t.constant(nb.node));
    const Tape::Id h1 = mlp.apply("enc_edge", t.constant(nb.edge));
    Tape::Id h2 = mlp.apply("enc_face", t.constant(nb.face));
    Tape::Id h3 = mlp.apply("enc_contact", t.constant(nb.contact));
    Tape::Id h4 = cfg.no_object_cells
                      ? mlp.apply("enc_node", t.constant(nb.virtual_node))
                      : mlp.apply("enc_object", t.constant(nb.object));

    if (cfg.non_sequential) {
        std::vector<Tape::Id> emb{h0, h1, h2, h3, h4};
        for (int r = 0; r < cfg.repeats; ++r) {
            const std::string pre = "r" + std::to_string(r) + ".";
            std::vector<Tape::Id> next(5);
            for (int dst = 0; dst < 5; ++dst) {
                std::vector<Tape::Id> parts{emb[dst]};
                for (int src : sources_of(dst)) {
                    const auto& rel = w.relations.at({src, dst});
                    Tape::Id msg = mlp.apply(
                        pre + "ns_msg_" + std::to_string(src) + "to" +
                            std::to_string(dst),
                        emb[src]);
                    Tape::Id agg = t.scale_rows(
                        t.segment_sum(t.gather_rows(msg, rel.src_idx), rel.dst_seg,
                                      static_cast<int>(rel.dst_inv.size())),
                        rel.dst_inv);
                    parts.push_back(agg);
                }
                next[dst] = mlp.apply(pre + "ns_upd_" + std::to_string(dst),
                                      t.concat_cols(parts));
            }
            emb = next;
        }
        f.node_out = mlp.apply("dec_node", emb[0]);
        f.object_out = mlp.apply("dec_object", emb[4]);
        return f;
    }

    for (int r = 0; r < cfg.repeats; ++r) {
        const std::string pre = "r" + std::to_string(r) + ".";

        // faces pick up their nodes, edges, and parent object
        Tape::Id face_nodes = t.segment_sum(
            t.gather_rows(mlp.apply(pre + "msg_node_face", h0), w.face_node_idx),
            w.face_node_seg, w.n_faces);
        Tape::Id face_edges = t.segment_sum(
            t.gather_rows(mlp.apply(pre + "msg_edge_face", h1), w.face_edge_idx),
            w.face_edge_seg, w.n_faces);
        Tape::Id h2p;
        if (cfg.no_object_cells) {
            h2p = mlp.apply(pre + "upd_face",
                            t.concat_cols({h2, face_nodes, face_edges}));
        } else {
            Tape::Id face_obj =
                t.gather_rows(mlp.apply(pre + "msg_object_face", h4), w.face_object);
            h2p = mlp.apply(pre + "upd_face",
                            t.concat_cols({h2, face_nodes, face_edges, face_obj}));
        }

        // each directed contact combines its sender/receiver face messages
        Tape::Id m23 = mlp.apply(pre + "msg_face_contact", h2p);
        Tape::Id h3p = mlp.apply(
            pre + "upd_contact",
            t.concat_cols({h3, t.gather_rows(m23, w.contact_sender),
                           t.gather_rows(m23, w.contact_receiver)}));

        // receiver faces sum their incoming collision effects (identity msg)
        Tape::Id incoming = t.segment_sum(h3p, w.contact_receiver, w.n_faces);
        Tape::Id h2pp =
            mlp.apply(pre + "upd_face_collision", t.concat_cols({h2p, incoming}));

        // object update: mean over its faces
        Tape::Id obj_faces = t.scale_rows(
            t.segment_sum(mlp.apply(pre + "msg_face_object", h2pp), w.face_object,
                          w.n_objects),
            w.object_face_inv);
        Tape::Id h4p = mlp.apply(pre + "upd_object", t.concat_cols({h4, obj_faces}));

        // node/object exchange; node messages use the round-input h0
        Tape::Id obj_nodes = t.scale_rows(
            t.segment_sum(mlp.apply(pre + "msg_node_object", h0), w.node_object,
                          w.n_objects),
            w.object_node_inv);
        Tape::Id h0p = mlp.apply(
            pre + "upd_node",
            t.concat_cols(
                {h0, t.gather_rows(mlp.apply(pre + "msg_object_node", h4p),
                                   w.node_object)}));
        Tape::Id h4pp =
            mlp.apply(pre + "upd_object_final", t.concat_cols({h4p, obj_nodes}));

        h0 = h0p;
        h2 = h2pp;
        h3 = h3p;
        h4 = h4pp;
    }

    f.node_out = mlp.apply("dec_node", h0);
    f.object_out = mlp.apply("dec_object", h4);
    return f;
}

void backward(Forward& f, const Mat& d_node, const Mat& d_object) {
    f.tape.backward({{f.node_out, d_node}, {f.object_out, d_object}});
}

} // namespace hopnet::nn
