#include "surmo/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "surmo/error.hpp"

namespace surmo {

Vec3d closest_point_on_triangle(const Vec3d& p, const Vec3d& a, const Vec3d& b, const Vec3d& c) {
    // Ericson, Real-Time Collision Detection, 5.1.5.
    Vec3d ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap);
    double d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    Vec3d bp = p - b;
    double d3 = dot(ab, bp);
    double d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        double v = d1 / (d1 - d3);
        return a + ab * v;
    }

    Vec3d cp = p - c;
    double d5 = dot(ab, cp);
    double d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        double w = d2 / (d2 - d6);
        return a + ac * w;
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom;
    double w = vc * denom;
    return a + ab * v + ac * w;
}

std::array<double, 3> barycentric(const Vec3d& p, const Vec3d& a, const Vec3d& b, const Vec3d& c) {
    Vec3d v0 = b - a, v1 = c - a, v2 = p - a;
    double d00 = dot(v0, v0);
    double d01 = dot(v0, v1);
    double d11 = dot(v1, v1);
    double d20 = dot(v2, v0);
    double d21 = dot(v2, v1);
    double denom = d00 * d11 - d01 * d01;
    if (denom == 0.0) return {1.0, 0.0, 0.0};
    double w1 = (d11 * d20 - d01 * d21) / denom;
    double w2 = (d00 * d21 - d01 * d20) / denom;
    return {1.0 - w1 - w2, w1, w2};
}

namespace {

Box3d face_box(const MeshFrame& mesh, uint32_t f) {
    Box3d b;
    for (int k = 0; k < 3; ++k) b.extend(mesh.vertices[mesh.faces[f][k]]);
    return b;
}

constexpr int kLeafSize = 4;

int build_node(FaceBvh& bvh, const MeshFrame& mesh, std::vector<uint32_t>& order,
               std::vector<Vec3d>& centroids, int first, int count) {
    int node_id = int(bvh.nodes.size());
    bvh.nodes.emplace_back();

    Box3d box;
    for (int i = 0; i < count; ++i) box.extend(face_box(mesh, order[size_t(first + i)]));

    if (count <= kLeafSize) {
        // Faces inside a leaf sorted ascending so traversal visits lower
        // indices first on exact ties.
        std::sort(order.begin() + first, order.begin() + first + count);
        FaceBvh::Node& n = bvh.nodes[size_t(node_id)];
        n.box = box;
        n.first = int32_t(bvh.leaf_faces.size());
        n.count = count;
        for (int i = 0; i < count; ++i) bvh.leaf_faces.push_back(order[size_t(first + i)]);
        return node_id;
    }

    Box3d cbox;
    for (int i = 0; i < count; ++i) cbox.extend(centroids[order[size_t(first + i)]]);
    Vec3d diag = cbox.diagonal();
    int axis = 0;
    if (diag.y > diag.x) axis = 1;
    if (diag.z > diag[axis]) axis = 2;

    int mid = count / 2;
    std::nth_element(order.begin() + first, order.begin() + first + mid,
                     order.begin() + first + count, [&](uint32_t fa, uint32_t fb) {
                         double ca = centroids[fa][axis];
                         double cb = centroids[fb][axis];
                         if (ca != cb) return ca < cb;
                         return fa < fb;
                     });

    int left = build_node(bvh, mesh, order, centroids, first, mid);
    int right = build_node(bvh, mesh, order, centroids, first + mid, count - mid);
    FaceBvh::Node& n = bvh.nodes[size_t(node_id)];
    n.box = box;
    n.left = int32_t(left);
    n.right = int32_t(right);
    return node_id;
}

struct NearestQuery {
    const FaceBvh& bvh;
    const MeshFrame& mesh;
    Vec3d p;
    double best_d2 = std::numeric_limits<double>::max();
    int best_face = -1;
    Vec3d best_point;

    void consider_face(uint32_t f) {
        const auto& tri = mesh.faces[f];
        Vec3d q = closest_point_on_triangle(p, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                            mesh.vertices[tri[2]]);
        double d2 = norm2(p - q);
        if (d2 < best_d2 || (d2 == best_d2 && int(f) < best_face)) {
            best_d2 = d2;
            best_face = int(f);
            best_point = q;
        }
    }

    void visit(int node_id) {
        const FaceBvh::Node& n = bvh.nodes[size_t(node_id)];
        if (n.left < 0) {
            for (int i = 0; i < n.count; ++i) consider_face(bvh.leaf_faces[size_t(n.first + i)]);
            return;
        }
        double dl = bvh.nodes[size_t(n.left)].box.sq_dist(p);
        double dr = bvh.nodes[size_t(n.right)].box.sq_dist(p);
        int near = n.left, far = n.right;
        double dn = dl, df = dr;
        if (dr < dl) {
            near = n.right;
            far = n.left;
            dn = dr;
            df = dl;
        }
        // Descend on == too, so tie-breaking by face index stays exact.
        if (dn <= best_d2) visit(near);
        if (df <= best_d2) visit(far);
    }
};

}  // namespace

FaceBvh build_bvh(const MeshFrame& mesh) {
    if (mesh.faces.empty()) throw InvalidArgument("build_bvh: mesh has no faces");
    for (const auto& f : mesh.faces)
        for (uint32_t idx : f)
            if (idx >= mesh.vertices.size())
                throw InvalidArgument("build_bvh: face index out of range");

    FaceBvh bvh;
    std::vector<uint32_t> order(mesh.faces.size());
    std::iota(order.begin(), order.end(), 0u);
    std::vector<Vec3d> centroids(mesh.faces.size());
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& tri = mesh.faces[f];
        centroids[f] = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
    }
    bvh.nodes.reserve(mesh.faces.size() * 2);
    build_node(bvh, mesh, order, centroids, 0, int(mesh.faces.size()));
    return bvh;
}

NearestFaceResult nearest_face(const FaceBvh& bvh, const MeshFrame& mesh, const Vec3d& p) {
    if (bvh.empty()) throw InvalidArgument("nearest_face: empty BVH");
    NearestQuery q{bvh, mesh, p};
    q.visit(0);
    return {q.best_face, q.best_point, std::sqrt(q.best_d2)};
}

NearestFaceResult nearest_face_brute(const MeshFrame& mesh, const Vec3d& p) {
    if (mesh.faces.empty()) throw InvalidArgument("nearest_face_brute: mesh has no faces");
    static const FaceBvh no_bvh;
    NearestQuery q{no_bvh, mesh, p};
    for (uint32_t f = 0; f < mesh.faces.size(); ++f) q.consider_face(f);
    return {q.best_face, q.best_point, std::sqrt(q.best_d2)};
}

SurfaceLocalCoord surface_local_coords(const FaceBvh& bvh, const MeshFrame& mesh, const Vec3d& p) {
    NearestFaceResult nf = nearest_face(bvh, mesh, p);
    const auto& tri = mesh.faces[size_t(nf.face_index)];
    std::array<double, 3> w =
        barycentric(nf.point, mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    Vec2d uv = mesh.uv_coords[tri[0]] * w[0] + mesh.uv_coords[tri[1]] * w[1] +
               mesh.uv_coords[tri[2]] * w[2];
    Vec3d n = face_normal(mesh, nf.face_index);
    double side = dot(p - nf.point, n);
    double h = side < 0.0 ? -nf.distance : nf.distance;
    return {nf.face_index, uv.x, uv.y, h};
}

Vec3d local_to_world(const MeshFrame& mesh, const SurfaceLocalCoord& c) {
    if (c.face_index < 0 || size_t(c.face_index) >= mesh.faces.size())
        throw InvalidArgument("local_to_world: face index " + std::to_string(c.face_index) +
                              " out of range");
    const auto& tri = mesh.faces[size_t(c.face_index)];
    Vec2d a = mesh.uv_coords[tri[0]];
    Vec2d b = mesh.uv_coords[tri[1]];
    Vec2d d = mesh.uv_coords[tri[2]];

    // Invert the affine UV map of this face.
    Vec2d e1 = b - a, e2 = d - a, q{c.u - a.x, c.v - a.y};
    double det = cross2(e1, e2);
    if (std::abs(det) < 1e-18)
        throw InvalidArgument("local_to_world: degenerate UV triangle on face " +
                              std::to_string(c.face_index));
    double w1 = cross2(q, e2) / det;
    double w2 = cross2(e1, q) / det;
    double w0 = 1.0 - w1 - w2;
    constexpr double tol = 1e-9;
    if (w0 < -tol || w1 < -tol || w2 < -tol)
        throw InvalidArgument("local_to_world: (u,v) outside UV triangle of face " +
                              std::to_string(c.face_index));

    Vec3d surface = mesh.vertices[tri[0]] * w0 + mesh.vertices[tri[1]] * w1 +
                    mesh.vertices[tri[2]] * w2;
    return surface + face_normal(mesh, c.face_index) * c.h;
}

Vec3d face_normal(const MeshFrame& mesh, int face) {
    const auto& tri = mesh.faces[size_t(face)];
    Vec3d n = cross(mesh.vertices[tri[1]] - mesh.vertices[tri[0]],
                    mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    double len = norm(n);
    if (len < 1e-18)
        throw InvalidArgument("face_normal: zero-area face " + std::to_string(face));
    return n / len;
}

std::vector<Vec3d> face_normals(const MeshFrame& mesh) {
    std::vector<Vec3d> normals(mesh.faces.size());
    for (size_t f = 0; f < mesh.faces.size(); ++f) normals[f] = face_normal(mesh, int(f));
    return normals;
}

}  // namespace surmo
