#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "surmo/motion.hpp"
#include "surmo/tensor.hpp"
#include "surmo/triplane.hpp"

namespace surmo {

// Architecture/configuration of the full model. Defaults follow the
// 256x256x48 triplane layout; the desk-scale training configs shrink uv_res.
struct ModelConfig {
    int uv_res = 256;         // motion-map and triplane resolution
    int plane_channels = 16;  // per plane, 3 planes concatenated for queries
    int motion_channels = 9;  // [P | V | T]
    int enc_base = 16;        // encoder widths enc_base, 2x, 4x
    int dm_hidden = 24;
    int rf_hidden = 32;
    int feat_channels = 16;   // render feature channels, first 3 supervised as RGB
    int sr_hidden = 16;
    int sr_factor = 2;        // fixed x2 upsampling head
    double h_max = 0.1;       // surface shell half-width, world units
    TriplaneKind triplane_kind = TriplaneKind::Surface;
    Box3d world_box;          // volumetric-triplane domain

    int triplane_channels_total() const { return 3 * plane_channels; }

    TriplaneTransform transform() const {
        return TriplaneTransform{triplane_kind, h_max, world_box};
    }
};

// Motion decoder outputs: normal map predicted at t (supervised at t, the
// t+1 normal being derivable from it plus the predicted velocity), velocity
// map predicted at t+1.
template <class T>
struct MotionPrediction {
    typename Tape<T>::Val normal_t;
    typename Tape<T>::Val velocity_next;
};

template <class T>
struct RadianceOutput {
    typename Tape<T>::Val color;  // [N, feat_channels]
    typename Tape<T>::Val sigma;  // [N, 1], nonnegative
};

// The four learned components over one named-parameter table: motion
// encoder, physical motion decoder, surface-conditioned radiance field, and
// the super-resolution head.
template <class T>
class SurmoModelT {
public:
    using Val = typename Tape<T>::Val;

    SurmoModelT() = default;
    explicit SurmoModelT(const ModelConfig& cfg, uint64_t seed = 0) : cfg_(cfg) { init(seed); }

    const ModelConfig& config() const { return cfg_; }

    // --- parameter table ---

    std::vector<std::string> param_names() const { return names_; }
    TensorT<T>& param(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw InvalidArgument("model: unknown parameter " + name);
        return it->second;
    }
    const TensorT<T>& param(const std::string& name) const {
        return const_cast<SurmoModelT*>(this)->param(name);
    }
    std::vector<TensorT<T>*> all_params() {
        std::vector<TensorT<T>*> out;
        for (const auto& n : names_) out.push_back(&params_.at(n));
        return out;
    }
    void zero_grad() {
        for (auto& [name, p] : params_) p.zero_grad();
    }

    template <class U>
    SurmoModelT<U> cast() const {
        SurmoModelT<U> out;
        out.cfg_ = cfg_;
        out.names_ = names_;
        for (const auto& [name, p] : params_) out.params_[name] = p.template cast<U>();
        return out;
    }

    // --- E_M: motion maps -> surface triplane ---

    std::array<Val, 3> encode_motion(Tape<T>& tape, Val uv_map) {
        const auto& x = tape.value(uv_map);
        if (x.rank() != 3 || x.dim(0) != cfg_.uv_res || x.dim(1) != cfg_.uv_res ||
            x.dim(2) != cfg_.motion_channels)
            throw InvalidArgument("encode_motion: expected [" + std::to_string(cfg_.uv_res) + "," +
                                  std::to_string(cfg_.uv_res) + "," +
                                  std::to_string(cfg_.motion_channels) + "], got " +
                                  shape_str(x.shape));
        Val e1 = tape.leaky_relu(conv(tape, uv_map, "enc.conv1", 2, 1));
        Val e2 = tape.leaky_relu(conv(tape, e1, "enc.conv2", 2, 1));
        Val e3 = tape.leaky_relu(conv(tape, e2, "enc.conv3", 2, 1));
        Val r = e3;
        for (const char* blk : {"enc.res1", "enc.res2"}) {
            Val h = tape.leaky_relu(conv(tape, r, std::string(blk) + ".conv1", 1, 1));
            r = tape.add(r, conv(tape, h, std::string(blk) + ".conv2", 1, 1));
        }
        Val d1 = tape.leaky_relu(conv(tape, tape.bilinear_resize2x(r), "enc.dec1", 1, 1));
        Val d2 = tape.leaky_relu(conv(tape, tape.bilinear_resize2x(d1), "enc.dec2", 1, 1));
        Val d3 = conv(tape, tape.bilinear_resize2x(d2), "enc.dec3", 1, 1);
        int c = cfg_.plane_channels;
        return {tape.slice_channels(d3, 0, c), tape.slice_channels(d3, c, 2 * c),
                tape.slice_channels(d3, 2 * c, 3 * c)};
    }

    // --- D_M: triplane -> next-step motion maps ---

    MotionPrediction<T> decode_motion(Tape<T>& tape, const std::array<Val, 3>& planes,
                                      const std::vector<uint8_t>& mask) {
        Val x = tape.concat({planes[0], planes[1], planes[2]});
        const auto& xv = tape.value(x);
        if (int64_t(mask.size()) != int64_t(xv.dim(0)) * xv.dim(1))
            throw InvalidArgument("decode_motion: mask size does not match triplane resolution");
        Val h = tape.leaky_relu(conv(tape, x, "dm.conv1", 1, 1));
        Val y = conv(tape, h, "dm.conv2", 1, 1);
        Val mask3 = tape.constant(expand_mask(mask, xv.dim(0), xv.dim(1), 3));
        Val normal = tape.mul(tape.normalize3(tape.slice_channels(y, 0, 3), T(1e-8)), mask3);
        Val velocity = tape.mul(tape.slice_channels(y, 3, 6), mask3);
        return {normal, velocity};
    }

    // --- F_Phi: per-point features + view direction -> (color features, density) ---

    RadianceOutput<T> radiance_field(Tape<T>& tape, Val z, Val dirs) {
        const auto& zv = tape.value(z);
        const auto& dv = tape.value(dirs);
        if (zv.rank() != 2 || zv.dim(1) != cfg_.triplane_channels_total())
            throw InvalidArgument("radiance_field: expected z [N," +
                                  std::to_string(cfg_.triplane_channels_total()) + "], got " +
                                  shape_str(zv.shape));
        if (dv.rank() != 2 || dv.dim(1) != 3 || dv.dim(0) != zv.dim(0))
            throw InvalidArgument("radiance_field: direction shape mismatch " + shape_str(dv.shape));
        for (int64_t i = 0; i < dv.dim(0); ++i) {
            const T* d = dv.v.data() + i * 3;
            T n2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if (std::abs(n2 - T(1)) > T(2.1e-6))
                throw InvalidArgument("radiance_field: view direction not unit length");
        }
        Val h1 = tape.leaky_relu(dense(tape, z, "rf.l1"));
        Val h2 = tape.leaky_relu(dense(tape, h1, "rf.l2"));
        Val h3 = tape.leaky_relu(dense(tape, tape.concat({h2, z}), "rf.l3"));
        Val h4 = tape.leaky_relu(dense(tape, h3, "rf.l4"));
        Val sigma = tape.softplus(dense(tape, h4, "rf.sigma"));
        Val c1 = tape.leaky_relu(dense(tape, tape.concat({h4, dirs}), "rf.color1"));
        Val color = dense(tape, c1, "rf.color2");
        return {color, sigma};
    }

    // Single-point convenience wrapper.
    std::pair<std::vector<T>, T> radiance_field_point(const std::vector<T>& z, const Vec3d& d) {
        Tape<T> tape;
        TensorT<T> zt({1, int(z.size())}, z);
        TensorT<T> dt({1, 3}, {T(d.x), T(d.y), T(d.z)});
        RadianceOutput<T> out = radiance_field(tape, tape.constant(std::move(zt)),
                                               tape.constant(std::move(dt)));
        return {tape.value(out.color).v, tape.value(out.sigma).v[0]};
    }

    // --- G_2: feature image -> RGB at 2x resolution ---

    Val super_resolve(Tape<T>& tape, Val feat) {
        const auto& fv = tape.value(feat);
        if (fv.rank() != 3 || fv.dim(2) != cfg_.feat_channels)
            throw InvalidArgument("super_resolve: expected [H,W," +
                                  std::to_string(cfg_.feat_channels) + "], got " +
                                  shape_str(fv.shape));
        Val up = tape.bilinear_resize2x(feat);
        Val h = tape.leaky_relu(conv(tape, up, "sr.conv1", 1, 1));
        Val y = conv(tape, h, "sr.conv2", 1, 1);
        // Residual from the upsampled RGB channels; zero-init final conv makes
        // this head start as plain bilinear upsampling.
        return tape.clamp01(tape.add(y, tape.slice_channels(up, 0, 3)));
    }

    // Non-tape wrappers ------------------------------------------------------

    SurfaceTriplane encode_motion_map(const UvMap& map);
    std::pair<UvMap, UvMap> decode_motion_maps(const SurfaceTriplane& tp,
                                               const std::vector<uint8_t>& mask);

    template <class U>
    friend class SurmoModelT;

private:
    ModelConfig cfg_;
    std::map<std::string, TensorT<T>> params_;
    std::vector<std::string> names_;

    Val conv(Tape<T>& tape, Val x, const std::string& name, int stride, int pad) {
        return tape.conv2d(x, tape.param(param(name + ".w")), tape.param(param(name + ".b")),
                           stride, pad);
    }
    Val dense(Tape<T>& tape, Val x, const std::string& name) {
        return tape.dense(x, tape.param(param(name + ".w")), tape.param(param(name + ".b")));
    }

    static TensorT<T> expand_mask(const std::vector<uint8_t>& mask, int h, int w, int c) {
        TensorT<T> m({h, w, c});
        for (int64_t t = 0; t < int64_t(h) * w; ++t)
            for (int j = 0; j < c; ++j) m.v[size_t(t * c + j)] = mask[size_t(t)] ? T(1) : T(0);
        return m;
    }

    void add_conv(const std::string& name, int kh, int kw, int ci, int co, Rng& rng, bool zero) {
        TensorT<T> w({kh, kw, ci, co});
        if (!zero) {
            double bound = std::sqrt(6.0 / (kh * kw * ci)) * std::sqrt(2.0 / 1.04);
            for (auto& x : w.v) x = T(rng.uniform(-bound, bound));
        }
        register_param(name + ".w", std::move(w));
        register_param(name + ".b", TensorT<T>({co}));
    }

    void add_dense(const std::string& name, int in, int out, Rng& rng, bool zero) {
        TensorT<T> w({in, out});
        if (!zero) {
            double bound = std::sqrt(6.0 / in) * std::sqrt(2.0 / 1.04);
            for (auto& x : w.v) x = T(rng.uniform(-bound, bound));
        }
        register_param(name + ".w", std::move(w));
        register_param(name + ".b", TensorT<T>({out}));
    }

    void register_param(const std::string& name, TensorT<T> t) {
        if (params_.count(name)) throw InvalidArgument("model: duplicate parameter " + name);
        params_[name] = std::move(t);
        names_.push_back(name);
    }

    void init(uint64_t seed) {
        Rng rng(seed);
        int b = cfg_.enc_base;
        int tc = cfg_.triplane_channels_total();
        add_conv("enc.conv1", 3, 3, cfg_.motion_channels, b, rng, false);
        add_conv("enc.conv2", 3, 3, b, 2 * b, rng, false);
        add_conv("enc.conv3", 3, 3, 2 * b, 4 * b, rng, false);
        add_conv("enc.res1.conv1", 3, 3, 4 * b, 4 * b, rng, false);
        add_conv("enc.res1.conv2", 3, 3, 4 * b, 4 * b, rng, false);
        add_conv("enc.res2.conv1", 3, 3, 4 * b, 4 * b, rng, false);
        add_conv("enc.res2.conv2", 3, 3, 4 * b, 4 * b, rng, false);
        add_conv("enc.dec1", 3, 3, 4 * b, 2 * b, rng, false);
        add_conv("enc.dec2", 3, 3, 2 * b, b, rng, false);
        add_conv("enc.dec3", 3, 3, b, tc, rng, true);  // zero: zero input -> zero triplane
        add_conv("dm.conv1", 3, 3, tc, cfg_.dm_hidden, rng, false);
        add_conv("dm.conv2", 3, 3, cfg_.dm_hidden, 6, rng, true);
        int h = cfg_.rf_hidden;
        add_dense("rf.l1", tc, h, rng, false);
        add_dense("rf.l2", h, h, rng, false);
        add_dense("rf.l3", h + tc, h, rng, false);
        add_dense("rf.l4", h, h, rng, false);
        add_dense("rf.sigma", h, 1, rng, false);
        add_dense("rf.color1", h + 3, h, rng, false);
        add_dense("rf.color2", h, cfg_.feat_channels, rng, false);
        add_conv("sr.conv1", 3, 3, cfg_.feat_channels, cfg_.sr_hidden, rng, false);
        add_conv("sr.conv2", 3, 3, cfg_.sr_hidden, 3, rng, true);  // zero: identity-ish start
    }
};

using SurmoModel = SurmoModelT<float>;

// --- non-tape wrappers (float path) -----------------------------------------

template <class T>
SurfaceTriplane SurmoModelT<T>::encode_motion_map(const UvMap& map) {
    Tape<T> tape;
    TensorT<T> in({map.height, map.width, map.channels});
    for (size_t i = 0; i < map.data.size(); ++i) in.v[i] = T(map.data[i]);
    auto planes = encode_motion(tape, tape.constant(std::move(in)));
    SurfaceTriplane tp = SurfaceTriplane::zeros(cfg_.uv_res, cfg_.plane_channels, cfg_.h_max);
    auto copy_plane = [&](Val v, Tensor& dst) {
        const auto& src = tape.value(v);
        for (size_t i = 0; i < src.v.size(); ++i) dst.v[i] = float(src.v[i]);
    };
    copy_plane(planes[0], tp.plane_uv);
    copy_plane(planes[1], tp.plane_uh);
    copy_plane(planes[2], tp.plane_hv);
    return tp;
}

template <class T>
std::pair<UvMap, UvMap> SurmoModelT<T>::decode_motion_maps(const SurfaceTriplane& tp,
                                                           const std::vector<uint8_t>& mask) {
    Tape<T> tape;
    auto to_val = [&](const Tensor& p) {
        TensorT<T> t({p.dim(0), p.dim(1), p.dim(2)});
        for (size_t i = 0; i < p.v.size(); ++i) t.v[i] = T(p.v[i]);
        return tape.constant(std::move(t));
    };
    std::array<Val, 3> planes{to_val(tp.plane_uv), to_val(tp.plane_uh), to_val(tp.plane_hv)};
    MotionPrediction<T> pred = decode_motion(tape, planes, mask);
    auto to_map = [&](Val v) {
        const auto& t = tape.value(v);
        UvMap m;
        m.width = t.dim(1);
        m.height = t.dim(0);
        m.channels = t.dim(2);
        m.data.resize(t.v.size());
        for (size_t i = 0; i < t.v.size(); ++i) m.data[i] = float(t.v[i]);
        m.mask = mask;
        return m;
    };
    return {to_map(pred.normal_t), to_map(pred.velocity_next)};
}

}  // namespace surmo
