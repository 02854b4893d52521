#include "hopnet/features.hpp"

#include <algorithm>

namespace hopnet::feat {

namespace {

void put_vec(Mat& m, int row, int col, const Vec3& v) {
    m.at(row, col) = v.x;
    m.at(row, col + 1) = v.y;
    m.at(row, col + 2) = v.z;
}

void put_vec_norm(Mat& m, int row, int col, const Vec3& v) {
    put_vec(m, row, col, v);
    m.at(row, col + 3) = v.norm();
}

void check_history(const FrameHistory& h, const topo::Topology& topo) {
    const auto n = static_cast<std::size_t>(topo.node_count);
    const auto k = topo.objects.size();
    for (const Frame* f : {&h.reference, &h.prev2, &h.prev, &h.curr}) {
        if (f->positions.size() != n || f->centers.size() != k)
            throw MissingHistory("frame history incomplete or inconsistent");
    }
}

} // namespace

std::vector<Vec3> object_centers(const std::vector<Vec3>& positions,
                                 const topo::Topology& topo) {
    std::vector<Vec3> centers(topo.objects.size());
    for (const auto& obj : topo.objects) {
        Vec3 acc;
        for (int i = 0; i < obj.node_count; ++i) acc += positions[obj.node_offset + i];
        centers[obj.object_id] = acc / static_cast<double>(obj.node_count);
    }
    return centers;
}

FrameHistory FrameHistory::from_two_frames(Frame reference, Frame prev, Frame curr) {
    FrameHistory h;
    h.prev2.positions.resize(prev.positions.size());
    for (std::size_t i = 0; i < prev.positions.size(); ++i)
        h.prev2.positions[i] = prev.positions[i] * 2.0 - curr.positions[i];
    h.prev2.centers.resize(prev.centers.size());
    for (std::size_t k = 0; k < prev.centers.size(); ++k)
        h.prev2.centers[k] = prev.centers[k] * 2.0 - curr.centers[k];
    h.prev2.orientations = prev.orientations;
    h.reference = std::move(reference);
    h.prev = std::move(prev);
    h.curr = std::move(curr);
    return h;
}

Mat node_features(const FrameHistory& h, const CombinatorialComplex& cc,
                  const FeatureFlags& flags) {
    const auto& topo = cc.topo();
    check_history(h, topo);
    const int dim = flags.no_center_mass_distance ? 8 : 16;
    Mat out(topo.node_count, dim);
    for (int i = 0; i < topo.node_count; ++i) {
        const int k = topo.node_object[i];
        const Vec3 vel_t = h.curr.positions[i] - h.prev.positions[i];
        const Vec3 vel_p = h.prev.positions[i] - h.prev2.positions[i];
        put_vec_norm(out, i, 0, vel_t);
        put_vec_norm(out, i, 4, vel_p);
        if (!flags.no_center_mass_distance) {
            const Vec3 d0 = h.reference.positions[i] - h.reference.centers[k];
            const Vec3 dt = h.curr.positions[i] - h.curr.centers[k];
            put_vec_norm(out, i, 8, d0);
            put_vec_norm(out, i, 12, dt);
        }
    }
    return out;
}

Mat edge_features(const FrameHistory& h, const CombinatorialComplex& cc) {
    const auto& topo = cc.topo();
    check_history(h, topo);
    Mat out(static_cast<int>(topo.edges.size()), 8);
    for (std::size_t e = 0; e < topo.edges.size(); ++e) {
        const auto [s, r] = topo.edges[e];
        put_vec_norm(out, static_cast<int>(e), 0,
                     h.reference.positions[s] - h.reference.positions[r]);
        put_vec_norm(out, static_cast<int>(e), 4,
                     h.curr.positions[s] - h.curr.positions[r]);
    }
    return out;
}

Mat face_features(const FrameHistory& h, const CombinatorialComplex& cc) {
    const auto& topo = cc.topo();
    check_history(h, topo);
    Mat out(static_cast<int>(topo.faces.size()), 4);
    for (std::size_t f = 0; f < topo.faces.size(); ++f) {
        const auto& ids = topo.faces[f].node_ids;
        const Vec3 n = geom::triangle_normal(
            {h.curr.positions[ids[0]], h.curr.positions[ids[1]],
             h.curr.positions[ids[2]]});
        put_vec_norm(out, static_cast<int>(f), 0, n);
    }
    return out;
}

Mat contact_features(const FrameHistory& h, const CombinatorialComplex& cc) {
    const auto& topo = cc.topo();
    check_history(h, topo);
    const auto& contacts = cc.contacts();
    Mat out(static_cast<int>(contacts.size()), 28);
    for (std::size_t c = 0; c < contacts.size(); ++c) {
        const auto& ct = contacts[c];
        const int row = static_cast<int>(c);
        put_vec_norm(out, row, 0, ct.p_sender - ct.p_receiver);
        const auto& s_ids = topo.faces[ct.sender_face].node_ids;
        const auto& r_ids = topo.faces[ct.receiver_face].node_ids;
        for (int v = 0; v < 3; ++v)
            put_vec_norm(out, row, 4 + 4 * v, h.curr.positions[s_ids[v]] - ct.p_sender);
        for (int v = 0; v < 3; ++v)
            put_vec_norm(out, row, 16 + 4 * v,
                         h.curr.positions[r_ids[v]] - ct.p_receiver);
    }
    return out;
}

Mat object_features(const FrameHistory& h, const CombinatorialComplex& cc,
                    const std::vector<ObjectParams>& params) {
    const auto& topo = cc.topo();
    check_history(h, topo);
    if (params.size() != topo.objects.size())
        throw MissingPhysicalParams("object params missing or wrong count");
    Mat out(static_cast<int>(topo.objects.size()), 13);
    for (std::size_t k = 0; k < topo.objects.size(); ++k) {
        const int row = static_cast<int>(k);
        const Vec3 vel_t = h.curr.centers[k] - h.prev.centers[k];
        const Vec3 vel_p = h.prev.centers[k] - h.prev2.centers[k];
        put_vec_norm(out, row, 0, vel_t);
        put_vec_norm(out, row, 4, vel_p);
        out.at(row, 8) = params[k].is_static ? 1.0 : 0.0;
        out.at(row, 9) = params[k].is_static ? 0.0 : 1.0;
        out.at(row, 10) = params[k].mass;
        out.at(row, 11) = params[k].friction;
        out.at(row, 12) = params[k].restitution;
    }
    return out;
}

Mat virtual_node_features(const FrameHistory& h, const CombinatorialComplex& cc,
                          const FeatureFlags& flags) {
    const auto& topo = cc.topo();
    check_history(h, topo);
    const int dim = flags.no_center_mass_distance ? 8 : 16;
    Mat out(static_cast<int>(topo.objects.size()), dim);
    for (std::size_t k = 0; k < topo.objects.size(); ++k) {
        const int row = static_cast<int>(k);
        put_vec_norm(out, row, 0, h.curr.centers[k] - h.prev.centers[k]);
        put_vec_norm(out, row, 4, h.prev.centers[k] - h.prev2.centers[k]);
        // center-of-mass distance of the center itself is zero
    }
    return out;
}

FeatureBundle build_bundle(const FrameHistory& h, const CombinatorialComplex& cc,
                           const std::vector<ObjectParams>& params,
                           const FeatureFlags& flags) {
    FeatureBundle b;
    b.node = node_features(h, cc, flags);
    b.edge = edge_features(h, cc);
    b.face = face_features(h, cc);
    b.contact = contact_features(h, cc);
    b.object = object_features(h, cc, params);
    b.virtual_node = virtual_node_features(h, cc, flags);
    return b;
}

Normalizer Normalizer::identity(int dim) {
    Normalizer n(dim);
    n.count_ = 1.0;
    std::fill(n.m2_.begin(), n.m2_.end(), 1.0);
    return n;
}

std::vector<double> Normalizer::variance() const {
    std::vector<double> v(dim_, 1.0);
    if (count_ > 0.0)
        for (int i = 0; i < dim_; ++i) v[i] = m2_[i] / count_;
    return v;
}

void Normalizer::observe(const Mat& rows) {
    if (rows.cols != dim_) throw ShapeMismatch("normalizer dim mismatch");
    for (int r = 0; r < rows.rows; ++r) {
        count_ += 1.0;
        const double* x = rows.row(r);
        for (int c = 0; c < dim_; ++c) {
            const double delta = x[c] - mean_[c];
            mean_[c] += delta / count_;
            m2_[c] += delta * (x[c] - mean_[c]);
        }
    }
}

Mat Normalizer::normalize(const Mat& rows) const {
    if (rows.cols != dim_) throw ShapeMismatch("normalizer dim mismatch");
    const auto var = variance();
    Mat out(rows.rows, rows.cols);
    const bool virgin = count_ <= 0.0;
    for (int r = 0; r < rows.rows; ++r)
        for (int c = 0; c < dim_; ++c)
            out.at(r, c) = virgin ? rows.at(r, c)
                                  : (rows.at(r, c) - mean_[c]) / std::sqrt(var[c] + kEps);
    return out;
}

Mat Normalizer::denormalize(const Mat& rows) const {
    if (rows.cols != dim_) throw ShapeMismatch("normalizer dim mismatch");
    const auto var = variance();
    Mat out(rows.rows, rows.cols);
    const bool virgin = count_ <= 0.0;
    for (int r = 0; r < rows.rows; ++r)
        for (int c = 0; c < dim_; ++c)
            out.at(r, c) = virgin ? rows.at(r, c)
                                  : rows.at(r, c) * std::sqrt(var[c] + kEps) + mean_[c];
    return out;
}

void Normalizer::set_state(double count, std::vector<double> mean,
                           std::vector<double> m2) {
    if (static_cast<int>(mean.size()) != dim_ || static_cast<int>(m2.size()) != dim_)
        throw ShapeMismatch("normalizer state dim mismatch");
    count_ = count;
    mean_ = std::move(mean);
    m2_ = std::move(m2);
}

BundleNormalizers BundleNormalizers::for_flags(const FeatureFlags& flags) {
    BundleNormalizers n;
    n.node = Normalizer(flags.no_center_mass_distance ? 8 : 16);
    n.edge = Normalizer(8);
    n.face = Normalizer(4);
    n.contact = Normalizer(28);
    n.object = Normalizer(13);
    return n;
}

void BundleNormalizers::observe(const FeatureBundle& b) {
    node.observe(b.node);
    if (observe_virtual) node.observe(b.virtual_node);
    edge.observe(b.edge);
    face.observe(b.face);
    contact.observe(b.contact);
    object.observe(b.object);
}

FeatureBundle normalize(const FeatureBundle& b, BundleNormalizers& norms,
                        bool update) {
    if (update) norms.observe(b);
    FeatureBundle out;
    out.node = norms.node.normalize(b.node);
    out.edge = norms.edge.normalize(b.edge);
    out.face = norms.face.normalize(b.face);
    out.contact = norms.contact.normalize(b.contact);
    out.object = norms.object.normalize(b.object);
    out.virtual_node = norms.node.normalize(b.virtual_node);
    return out;
}

} // namespace hopnet::feat
