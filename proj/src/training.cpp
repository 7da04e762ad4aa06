#include "surmo/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "surmo/error.hpp"

namespace surmo {

namespace fs = std::filesystem;

// --- dataset -------------------------------------------------------------------

Dataset make_toy_dataset(const ToyBodySpec& spec, int image_size, int train_cams, int test_cams) {
    Dataset ds;
    ds.seq = generate_sequence(spec);
    ds.seq.uv_res_hint = 64;

    Box3d box;
    for (const auto& frame : ds.seq.frames)
        for (const auto& v : frame) box.extend(v);
    // Rounded to float so the value survives checkpoints bit-exactly.
    ds.h_max = double(float(0.1 * norm(box.diagonal())));
    // Keep the volumetric domain float-exact as well so it survives checkpoints.
    ds.world_box = box.dilated(ds.h_max);
    ds.world_box.lo = {double(float(ds.world_box.lo.x)), double(float(ds.world_box.lo.y)),
                       double(float(ds.world_box.lo.z))};
    ds.world_box.hi = {double(float(ds.world_box.hi.x)), double(float(ds.world_box.hi.y)),
                       double(float(ds.world_box.hi.z))};

    int n = train_cams + test_cams;
    double focal = image_size * 1.55;
    ds.cameras = make_camera_ring(n, 1.55, 0.12, box.center(), focal, image_size, image_size);
    for (int i = 0; i < train_cams; ++i) ds.train_views.push_back(i);
    for (int i = train_cams; i < n; ++i) ds.test_views.push_back(i);

    io::Image tex = generate_texture(spec);
    LightSpec light;
    ds.images.resize(size_t(n) * size_t(ds.seq.frame_count()));
    for (int v = 0; v < n; ++v) {
        for (int t = 0; t < ds.seq.frame_count(); ++t) {
            MeshFrame mesh = ds.seq.frame(t);
            ds.images[size_t(v) * size_t(ds.frames()) + size_t(t)] =
                reference_render(mesh, ds.cameras[size_t(v)], tex, light).color;
        }
    }
    return ds;
}

namespace {

std::string view_list(const std::vector<int>& views) {
    std::string s;
    for (size_t i = 0; i < views.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(views[i]);
    }
    return s;
}

std::vector<int> parse_view_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

std::string frame_image_name(int view, int frame) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "cam%d_f%03d.ppm", view, frame);
    return buf;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void save_dataset(const std::string& dir, const Dataset& ds) {
    fs::create_directories(fs::path(dir) / "cameras");
    fs::create_directories(fs::path(dir) / "images");
    io::write_mesh_sequence((fs::path(dir) / "sequence.smsq").string(), ds.seq);
    for (size_t i = 0; i < ds.cameras.size(); ++i)
        io::write_camera((fs::path(dir) / "cameras" / ("cam" + std::to_string(i) + ".txt")).string(),
                         ds.cameras[i]);
    for (size_t v = 0; v < ds.cameras.size(); ++v)
        for (int t = 0; t < ds.frames(); ++t)
            io::write_ppm((fs::path(dir) / "images" / frame_image_name(int(v), t)).string(),
                          ds.image(int(v), t));
    io::write_key_values((fs::path(dir) / "manifest.txt").string(),
                         {{"cameras", std::to_string(ds.cameras.size())},
                          {"frames", std::to_string(ds.frames())},
                          {"train_views", view_list(ds.train_views)},
                          {"test_views", view_list(ds.test_views)},
                          {"h_max", fmt(ds.h_max)},
                          {"box_lo", fmt(ds.world_box.lo.x) + " " + fmt(ds.world_box.lo.y) + " " +
                                         fmt(ds.world_box.lo.z)},
                          {"box_hi", fmt(ds.world_box.hi.x) + " " + fmt(ds.world_box.hi.y) + " " +
                                         fmt(ds.world_box.hi.z)}});
}

Dataset load_dataset(const std::string& dir) {
    if (!fs::exists(fs::path(dir) / "manifest.txt"))
        throw FileNotFoundError("dataset manifest not found in " + dir);
    Dataset ds;
    int n_cams = 0;
    int n_frames = 0;
    for (const auto& [k, v] : io::read_key_values((fs::path(dir) / "manifest.txt").string())) {
        std::istringstream is(v);
        if (k == "cameras") is >> n_cams;
        else if (k == "frames") is >> n_frames;
        else if (k == "train_views") ds.train_views = parse_view_list(v);
        else if (k == "test_views") ds.test_views = parse_view_list(v);
        else if (k == "h_max") is >> ds.h_max;
        else if (k == "box_lo") is >> ds.world_box.lo.x >> ds.world_box.lo.y >> ds.world_box.lo.z;
        else if (k == "box_hi") is >> ds.world_box.hi.x >> ds.world_box.hi.y >> ds.world_box.hi.z;
        else throw FormatError("unknown manifest key '" + k + "' in " + dir);
    }
    ds.seq = io::read_mesh_sequence((fs::path(dir) / "sequence.smsq").string());
    if (ds.seq.frame_count() != n_frames)
        throw FormatError("manifest frame count does not match sequence in " + dir);
    for (int i = 0; i < n_cams; ++i)
        ds.cameras.push_back(io::read_camera(
            (fs::path(dir) / "cameras" / ("cam" + std::to_string(i) + ".txt")).string()));
    ds.images.resize(size_t(n_cams) * size_t(n_frames));
    for (int v = 0; v < n_cams; ++v)
        for (int t = 0; t < n_frames; ++t)
            ds.images[size_t(v) * size_t(n_frames) + size_t(t)] =
                io::read_ppm((fs::path(dir) / "images" / frame_image_name(v, t)).string());
    return ds;
}

// --- checkpoints ------------------------------------------------------------------

namespace {

Tensor scalar_tensor(double v) { return Tensor({1}, {float(v)}); }

double get_scalar(const io::NamedTensors& table, const std::string& name) {
    for (const auto& [n, t] : table)
        if (n == name) return double(t.v.at(0));
    throw FormatError("checkpoint missing config entry " + name);
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointBundle& bundle) {
    const ModelConfig& mc = bundle.model.config();
    io::NamedTensors table;
    table.emplace_back("config/uv_res", scalar_tensor(mc.uv_res));
    table.emplace_back("config/plane_channels", scalar_tensor(mc.plane_channels));
    table.emplace_back("config/motion_channels", scalar_tensor(mc.motion_channels));
    table.emplace_back("config/enc_base", scalar_tensor(mc.enc_base));
    table.emplace_back("config/dm_hidden", scalar_tensor(mc.dm_hidden));
    table.emplace_back("config/rf_hidden", scalar_tensor(mc.rf_hidden));
    table.emplace_back("config/feat_channels", scalar_tensor(mc.feat_channels));
    table.emplace_back("config/sr_hidden", scalar_tensor(mc.sr_hidden));
    table.emplace_back("config/h_max", scalar_tensor(mc.h_max));
    table.emplace_back("config/triplane_kind",
                       scalar_tensor(mc.triplane_kind == TriplaneKind::Surface ? 0 : 1));
    table.emplace_back("config/box",
                       Tensor({6}, {float(mc.world_box.lo.x), float(mc.world_box.lo.y),
                                    float(mc.world_box.lo.z), float(mc.world_box.hi.x),
                                    float(mc.world_box.hi.y), float(mc.world_box.hi.z)}));
    table.emplace_back("config/window", scalar_tensor(bundle.trajectory.window));
    table.emplace_back("config/decay", scalar_tensor(bundle.decay));
    table.emplace_back("config/dynamics_cond", scalar_tensor(bundle.dynamics_cond ? 1 : 0));
    SurmoModel& m = const_cast<SurmoModel&>(bundle.model);
    for (const auto& name : m.param_names()) table.emplace_back(name, m.param(name));
    io::write_checkpoint(path, table);
}

CheckpointBundle load_checkpoint(const std::string& path) {
    io::NamedTensors table = io::read_checkpoint(path);
    ModelConfig mc;
    mc.uv_res = int(get_scalar(table, "config/uv_res"));
    mc.plane_channels = int(get_scalar(table, "config/plane_channels"));
    mc.motion_channels = int(get_scalar(table, "config/motion_channels"));
    mc.enc_base = int(get_scalar(table, "config/enc_base"));
    mc.dm_hidden = int(get_scalar(table, "config/dm_hidden"));
    mc.rf_hidden = int(get_scalar(table, "config/rf_hidden"));
    mc.feat_channels = int(get_scalar(table, "config/feat_channels"));
    mc.sr_hidden = int(get_scalar(table, "config/sr_hidden"));
    mc.h_max = get_scalar(table, "config/h_max");
    mc.triplane_kind =
        get_scalar(table, "config/triplane_kind") == 0 ? TriplaneKind::Surface
                                                       : TriplaneKind::Volumetric;
    for (const auto& [n, t] : table) {
        if (n == "config/box") {
            mc.world_box.lo = {double(t.v[0]), double(t.v[1]), double(t.v[2])};
            mc.world_box.hi = {double(t.v[3]), double(t.v[4]), double(t.v[5])};
        }
    }
    CheckpointBundle bundle;
    bundle.model = SurmoModel(mc, 0);
    bundle.decay = get_scalar(table, "config/decay");
    bundle.trajectory = TrajectoryConfig::decayed(int(get_scalar(table, "config/window")),
                                                  bundle.decay);
    bundle.dynamics_cond = get_scalar(table, "config/dynamics_cond") != 0;
    for (auto& [name, t] : table) {
        if (name.rfind("config/", 0) == 0) continue;
        Tensor& p = bundle.model.param(name);
        if (p.shape != t.shape)
            throw FormatError("checkpoint tensor " + name + " has shape " + shape_str(t.shape) +
                              ", expected " + shape_str(p.shape));
        p.v = std::move(t.v);
    }
    return bundle;
}

ModelConfig model_config_for(const TrainConfig& cfg, const Dataset& ds) {
    ModelConfig mc;
    mc.uv_res = cfg.uv_res;
    mc.plane_channels = cfg.plane_channels;
    mc.enc_base = cfg.enc_base;
    mc.rf_hidden = cfg.rf_hidden;
    mc.feat_channels = cfg.feat_channels;
    mc.sr_hidden = cfg.sr_hidden;
    mc.h_max = ds.h_max;
    mc.triplane_kind = cfg.triplane_kind;
    mc.world_box = ds.world_box;
    return mc;
}

// --- metrics -----------------------------------------------------------------------

io::Image downsample_area(const io::Image& img, int factor) {
    if (img.width % factor || img.height % factor)
        throw InvalidArgument("downsample_area: size not divisible by factor");
    io::Image out;
    out.width = img.width / factor;
    out.height = img.height / factor;
    out.channels = img.channels;
    out.pixels.assign(size_t(out.width) * size_t(out.height) * size_t(out.channels), 0.0f);
    double inv = 1.0 / (factor * factor);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < out.channels; ++c) {
                double acc = 0.0;
                for (int dy = 0; dy < factor; ++dy)
                    for (int dx = 0; dx < factor; ++dx)
                        acc += img.at(x * factor + dx, y * factor + dy, c);
                out.at(x, y, c) = float(acc * inv);
            }
    return out;
}

double psnr(const io::Image& a, const io::Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw InvalidArgument("psnr: image shape mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        double d = double(a.pixels[i]) - double(b.pixels[i]);
        mse += d * d;
    }
    mse /= double(a.pixels.size());
    if (mse < 1e-10) return 99.0;
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const io::Image& a, const io::Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw InvalidArgument("ssim: image shape mismatch");
    constexpr int kWin = 11;
    constexpr int kHalf = kWin / 2;
    constexpr double kSigma = 1.5;
    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    if (a.width < kWin || a.height < kWin) throw InvalidArgument("ssim: image smaller than window");

    double kernel[kWin][kWin];
    double ksum = 0.0;
    for (int y = 0; y < kWin; ++y)
        for (int x = 0; x < kWin; ++x) {
            double dx = x - kHalf, dy = y - kHalf;
            kernel[y][x] = std::exp(-(dx * dx + dy * dy) / (2 * kSigma * kSigma));
            ksum += kernel[y][x];
        }
    for (auto& row : kernel)
        for (double& k : row) k /= ksum;

    double total = 0.0;
    int64_t count = 0;
    for (int c = 0; c < a.channels; ++c) {
        for (int y = kHalf; y < a.height - kHalf; ++y) {
            for (int x = kHalf; x < a.width - kHalf; ++x) {
                double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
                for (int dy = -kHalf; dy <= kHalf; ++dy)
                    for (int dx = -kHalf; dx <= kHalf; ++dx) {
                        double w = kernel[dy + kHalf][dx + kHalf];
                        double va = a.at(x + dx, y + dy, c);
                        double vb = b.at(x + dx, y + dy, c);
                        mx += w * va;
                        my += w * vb;
                        xx += w * va * va;
                        yy += w * vb * vb;
                        xy += w * va * vb;
                    }
                double sx = xx - mx * mx, sy = yy - my * my, sxy = xy - mx * my;
                total += ((2 * mx * my + c1) * (2 * sxy + c2)) /
                         ((mx * mx + my * my + c1) * (sx + sy + c2));
                ++count;
            }
        }
    }
    return total / double(count);
}

// --- training ----------------------------------------------------------------------

namespace {

Tensor uvmap_to_tensor(const UvMap& map, bool zero_dynamics) {
    Tensor t({map.height, map.width, map.channels});
    t.v = map.data;
    if (zero_dynamics && map.channels == 9) {
        for (int64_t texel = 0; texel < int64_t(map.width) * map.height; ++texel)
            for (int c = 3; c < 9; ++c) t.v[size_t(texel * 9 + c)] = 0.0f;
    }
    return t;
}

Tensor image_to_tensor(const io::Image& img) {
    Tensor t({img.height, img.width, img.channels});
    t.v = img.pixels;
    return t;
}

io::Image tensor_to_image(const Tensor& t) {
    io::Image img;
    img.height = t.dim(0);
    img.width = t.dim(1);
    img.channels = t.dim(2);
    img.pixels = t.v;
    return img;
}

Camera half_camera(const Camera& cam) {
    Camera lo = cam;
    lo.fx *= 0.5;
    lo.fy *= 0.5;
    lo.cx *= 0.5;
    lo.cy *= 0.5;
    lo.width /= 2;
    lo.height /= 2;
    return lo;
}

struct FrameData {
    Tensor motion_in;     // [R,R,9], dynamics channels zeroed per ablation
    Tensor gt_normal;     // [R,R,3] at t
    Tensor gt_velocity;   // [R,R,3] at t+1
    MeshFrame mesh;
    FaceBvh bvh;
};

struct LossValues {
    double total, pix, vel, norm, vol;
};

}  // namespace

std::string TrainResult::csv() const {
    std::ostringstream os;
    os.precision(9);
    os << "step,loss_total,loss_pix,loss_vel,loss_norm,loss_vol,psnr\n";
    for (const auto& r : log)
        os << r.step << "," << r.loss_total << "," << r.loss_pix << "," << r.loss_vel << ","
           << r.loss_norm << "," << r.loss_vol << "," << r.psnr << "\n";
    return os.str();
}

TrainResult train(SurmoModel& model, const Dataset& ds, const TrainConfig& cfg,
                  const std::string& csv_path) {
    if (cfg.steps < 1) throw InvalidArgument("train: steps must be >= 1");
    if (ds.frames() < 2) throw InvalidArgument("train: dataset needs at least 2 frames");
    if (ds.image_width() % 2 || ds.image_height() % 2)
        throw InvalidArgument("train: image size must be even for the x2 head");

    const ModelConfig& mc = model.config();
    int res = mc.uv_res;
    TrajectoryConfig traj = TrajectoryConfig::decayed(cfg.window, cfg.decay);

    // Ground truth and motion inputs per usable frame (t, t+1 pairs).
    MeshFrame mesh0 = ds.seq.frame(0);
    std::vector<uint8_t> mask = rasterize_mask(mesh0, res, res);
    double n_mask = double(UvMap{res, res, 1, {}, mask}.covered_count());
    if (n_mask == 0) throw InvalidArgument("train: empty UV coverage mask");

    int usable = ds.frames() - 1;
    auto frames = std::vector<FrameData>(size_t(usable));
    for (int t = 0; t < usable; ++t) {
        FrameData& fd = frames[size_t(t)];
        fd.mesh = ds.seq.frame(t);
        fd.bvh = build_bvh(fd.mesh);
        MotionState state = extract_motion_state(ds.seq, t, traj);
        fd.motion_in = uvmap_to_tensor(motion_to_uv(state, fd.mesh, res, res), !cfg.dynamics_cond);
        fd.gt_normal = uvmap_to_tensor(normal_map_uv(fd.mesh, res, res), false);
        fd.gt_velocity = uvmap_to_tensor(
            vectors_to_uv(compute_velocity(ds.seq, t + 1), fd.mesh, res, res), false);
    }

    // Downsampled targets for the volume-rendering loss.
    std::vector<io::Image> low_gt(ds.images.size());
    for (const int v : ds.train_views)
        for (int t = 0; t < usable; ++t)
            low_gt[size_t(v) * size_t(ds.frames()) + size_t(t)] =
                downsample_area(ds.image(v, t), 2);

    Adam::Config acfg;
    acfg.lr = float(cfg.lr);
    Adam adam(model.all_params(), acfg);

    const bool decode = cfg.predict_velocity || cfg.predict_normal;
    const LossWeights& w = cfg.weights;

    TrainResult result;
    for (int step = 0; step < cfg.steps; ++step) {
        Rng rng = Rng::stream(cfg.seed, uint64_t(step));
        int t = int(rng.uniform_index(uint64_t(usable)));
        int view = ds.train_views[rng.uniform_index(ds.train_views.size())];
        uint64_t render_seed = rng.next();
        FrameData& fd = frames[size_t(t)];

        TapeF tape;
        TapeF::Val input = tape.constant(fd.motion_in);
        std::array<TapeF::Val, 3> planes = model.encode_motion(tape, input);

        std::vector<TapeF::Val> terms;
        std::vector<float> weights;
        double loss_vel = 0.0, loss_norm = 0.0;
        if (decode) {
            MotionPrediction<float> pred = model.decode_motion(tape, planes, mask);
            if (cfg.predict_velocity) {
                TapeF::Val lv = tape.masked_sq_mean(pred.velocity_next,
                                                    tape.constant(fd.gt_velocity), mask,
                                                    float(n_mask));
                loss_vel = double(tape.value(lv).v[0]);
                terms.push_back(lv);
                weights.push_back(float(w.velocity));
            }
            if (cfg.predict_normal) {
                TapeF::Val ln = tape.masked_sq_mean(pred.normal_t, tape.constant(fd.gt_normal),
                                                    mask, float(n_mask));
                loss_norm = double(tape.value(ln).v[0]);
                terms.push_back(ln);
                weights.push_back(float(w.normal));
            }
        }

        Camera low_cam = half_camera(ds.cameras[size_t(view)]);
        RenderConfig rc;
        rc.n_samples = cfg.n_samples;
        rc.seed = render_seed;
        rc.filtered = true;
        RenderResult<float> render =
            render_feature_image(tape, model, planes, fd.mesh, fd.bvh, low_cam, rc);

        TapeF::Val feat_rgb = tape.slice_channels(render.feature_image, 0, 3);
        TapeF::Val low_target =
            tape.constant(image_to_tensor(low_gt[size_t(view) * size_t(ds.frames()) + size_t(t)]));
        TapeF::Val lvol = tape.mse(feat_rgb, low_target);
        terms.push_back(lvol);
        weights.push_back(float(w.vol));

        TapeF::Val rgb = model.super_resolve(tape, render.feature_image);
        TapeF::Val target = tape.constant(image_to_tensor(ds.image(view, t)));
        TapeF::Val lpix = tape.l1(rgb, target);
        terms.push_back(lpix);
        weights.push_back(float(w.pix));

        TapeF::Val total = tape.weighted_sum(terms, weights);
        double total_v = double(tape.value(total).v[0]);
        double pix_v = double(tape.value(lpix).v[0]);
        double vol_v = double(tape.value(lvol).v[0]);
        if (!std::isfinite(total_v))
            throw NumericError("train: non-finite loss at step " + std::to_string(step) +
                               " (pix=" + std::to_string(pix_v) + ", vel=" +
                               std::to_string(loss_vel) + ", norm=" + std::to_string(loss_norm) +
                               ", vol=" + std::to_string(vol_v) + ")");

        model.zero_grad();
        tape.backward(total);
        adam.step();

        if (step == 0) result.step0_loss = total_v;
        result.final_loss = total_v;
        if (step % cfg.log_interval == 0 || step == cfg.steps - 1) {
            double p = psnr(tensor_to_image(tape.value(rgb)), ds.image(view, t));
            result.log.push_back({step, total_v, pix_v, loss_vel, loss_norm, vol_v, p});
        }
    }

    if (!csv_path.empty()) {
        std::ofstream f(csv_path);
        if (!f) throw FileNotFoundError("cannot write CSV: " + csv_path);
        f << result.csv();
    }
    return result;
}

// --- inference -----------------------------------------------------------------------

RenderedImage render_view(SurmoModel& model, const CheckpointBundle& bundle,
                          const MeshSequence& seq, int frame, const Camera& cam,
                          const RenderConfig& rc) {
    if (frame < 0 || frame >= seq.frame_count())
        throw InvalidArgument("render_view: frame " + std::to_string(frame) + " out of range");
    if (cam.width % 2 || cam.height % 2)
        throw InvalidArgument("render_view: camera resolution must be even");
    const ModelConfig& mc = model.config();
    MeshFrame mesh = seq.frame(frame);
    FaceBvh bvh = build_bvh(mesh);
    MotionState state = extract_motion_state(seq, frame, bundle.trajectory);
    UvMap map = motion_to_uv(state, mesh, mc.uv_res, mc.uv_res);

    TapeF tape;
    TapeF::Val input = tape.constant(uvmap_to_tensor(map, !bundle.dynamics_cond));
    std::array<TapeF::Val, 3> planes = model.encode_motion(tape, input);
    Camera low_cam = half_camera(cam);
    RenderResult<float> render = render_feature_image(tape, model, planes, mesh, bvh, low_cam, rc);
    TapeF::Val rgb = model.super_resolve(tape, render.feature_image);

    RenderedImage out;
    out.rgb = tensor_to_image(tape.value(rgb));
    out.feature = tensor_to_image(tape.value(render.feature_image));
    out.opacity = tensor_to_image(tape.value(render.opacity));
    out.rf_evals = render.rf_evals;
    out.total_samples = render.total_samples;
    return out;
}

std::vector<EvalRow> evaluate(SurmoModel& model, const CheckpointBundle& bundle, const Dataset& ds,
                              const std::vector<int>& views, int frame_stride,
                              const RenderConfig& rc) {
    std::vector<EvalRow> rows;
    for (int v : views) {
        for (int t = 0; t < ds.frames(); t += frame_stride) {
            RenderedImage r = render_view(model, bundle, ds.seq, t, ds.cameras[size_t(v)], rc);
            rows.push_back({v, t, psnr(r.rgb, ds.image(v, t)), ssim(r.rgb, ds.image(v, t))});
        }
    }
    return rows;
}

double eval_pixel_loss(SurmoModel& model, const CheckpointBundle& bundle, const Dataset& ds,
                       const std::vector<int>& views, int frame_stride) {
    RenderConfig rc;
    rc.n_samples = 32;
    rc.seed = 0;
    double total = 0.0;
    int64_t count = 0;
    for (int v : views) {
        for (int t = 0; t < ds.frames(); t += frame_stride) {
            RenderedImage r = render_view(model, bundle, ds.seq, t, ds.cameras[size_t(v)], rc);
            const io::Image& gt = ds.image(v, t);
            double acc = 0.0;
            for (size_t i = 0; i < gt.pixels.size(); ++i)
                acc += std::abs(double(r.rgb.pixels[i]) - double(gt.pixels[i]));
            total += acc / double(gt.pixels.size());
            ++count;
        }
    }
    return total / double(count);
}

}  // namespace surmo
