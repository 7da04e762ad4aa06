#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "surmo/error.hpp"
#include "surmo/io.hpp"
#include "surmo/parallel.hpp"
#include "surmo/synth.hpp"
#include "surmo/training.hpp"
#include "surmo/triplane.hpp"

namespace fs = std::filesystem;
using namespace surmo;

// Exit codes: 0 ok, 1 usage, 2 missing file, 3 format error, 4 runtime error.
namespace {

constexpr int kExitUsage = 1;
constexpr int kExitMissingFile = 2;
constexpr int kExitFormat = 3;
constexpr int kExitRuntime = 4;

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw FileNotFoundError("no such file: " + path);
}

ToyBodySpec read_spec_file(const std::string& path) {
    ToyBodySpec spec;
    if (path.empty()) return spec;
    require_file(path);
    for (const auto& [k, v] : io::read_key_values(path)) {
        std::istringstream is(v);
        if (k == "frames") is >> spec.frames;
        else if (k == "fps") is >> spec.fps;
        else if (k == "swing_amplitude") is >> spec.swing_amplitude;
        else if (k == "swing_frequency") is >> spec.swing_frequency;
        else if (k == "flap_amplitude") is >> spec.flap_amplitude;
        else if (k == "flap_lag") is >> spec.flap_lag;
        else if (k == "texture_seed") is >> spec.texture_seed;
        else if (k == "subdiv") is >> spec.subdiv;
        else throw FormatError("unknown spec key '" + k + "' in " + path);
        if (!is) throw FormatError("malformed spec value for '" + k + "' in " + path);
    }
    return spec;
}

int run(int argc, char** argv) {
    CLI::App app{"SurMo: surface-based 4D motion representation and rendering"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = hardware)")
        ->envname("SURMO_THREADS");

    // synth-data ---------------------------------------------------------------
    auto* synth = app.add_subcommand("synth-data", "generate the toy dataset");
    std::string spec_path, out_dir;
    int image_size = 96, train_cams = 4, test_cams = 2;
    synth->add_option("--spec", spec_path, "toy body spec (key=value)");
    synth->add_option("--out", out_dir, "output dataset directory")->required();
    synth->add_option("--image-size", image_size, "ground-truth image size");
    synth->add_option("--train-cams", train_cams, "training cameras");
    synth->add_option("--test-cams", test_cams, "held-out cameras");

    // extract-motion ------------------------------------------------------------
    auto* extract = app.add_subcommand("extract-motion", "write per-frame 9-channel UV motion maps");
    std::string seq_path, motion_out;
    int window = 5, res = 256;
    double decay = 0.8;
    extract->add_option("--seq", seq_path, "mesh sequence file")->required();
    extract->add_option("--out", motion_out, "output directory")->required();
    extract->add_option("--window", window, "trajectory window w");
    extract->add_option("--decay", decay, "trajectory weight decay");
    extract->add_option("--res", res, "UV map resolution");

    // train ----------------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "optimize a model on a dataset");
    train_cmd->set_config("--config", "", "key=value config file (flags override)");
    std::string data_dir, ckpt_out, csv_out;
    TrainConfig tc;
    bool no_dynamics = false, no_motion_pred = false;
    std::string triplane_kind = "surface";
    uint64_t seed = 0;
    train_cmd->add_option("--data", data_dir, "dataset directory")->required();
    train_cmd->add_option("--out", ckpt_out, "output checkpoint")->required();
    train_cmd->add_option("--steps", tc.steps, "training steps");
    train_cmd->add_option("--seed", seed, "RNG seed");
    train_cmd->add_option("--lr", tc.lr, "Adam learning rate");
    train_cmd->add_option("--res", tc.uv_res, "motion map / triplane resolution");
    train_cmd->add_option("--samples", tc.n_samples, "ray samples per render");
    train_cmd->add_option("--window", tc.window, "trajectory window");
    train_cmd->add_option("--decay", tc.decay, "trajectory decay");
    train_cmd->add_option("--csv", csv_out, "per-step metrics CSV path");
    train_cmd->add_option("--log-interval", tc.log_interval, "CSV row interval");
    train_cmd->add_flag("--no-dynamics", no_dynamics, "condition on pose only (zero V/T channels)");
    train_cmd->add_flag("--no-motion-pred", no_motion_pred, "disable the motion decoder losses");
    train_cmd->add_option("--triplane", triplane_kind, "surface|volumetric");

    // render ---------------------------------------------------------------------
    auto* render_cmd = app.add_subcommand("render", "render a novel view");
    std::string ckpt_path, cam_path, render_out;
    int frame = 0, n_samples = 64;
    uint64_t render_seed = 0;
    bool unfiltered = false;
    render_cmd->add_option("--ckpt", ckpt_path, "checkpoint")->required();
    render_cmd->add_option("--seq", seq_path, "mesh sequence")->required();
    render_cmd->add_option("--camera", cam_path, "camera file")->required();
    render_cmd->add_option("--frame", frame, "frame index");
    render_cmd->add_option("--out", render_out, "output PPM")->required();
    render_cmd->add_option("--samples", n_samples, "ray samples");
    render_cmd->add_option("--seed", render_seed, "sampling seed");
    render_cmd->add_flag("--unfiltered", unfiltered, "disable surface-guided filtering");

    // eval ------------------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM per view and frame");
    std::string eval_cameras = "held-out", eval_out;
    int stride = 1;
    eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint")->required();
    eval_cmd->add_option("--data", data_dir, "dataset directory")->required();
    eval_cmd->add_option("--cameras", eval_cameras, "held-out|train|all");
    eval_cmd->add_option("--out", eval_out, "metrics CSV")->required();
    eval_cmd->add_option("--stride", stride, "frame stride");
    eval_cmd->add_option("--samples", n_samples, "ray samples");
    eval_cmd->add_option("--seed", render_seed, "sampling seed");

    // ablate-occupancy ---------------------------------------------------------------
    auto* occ_cmd = app.add_subcommand("ablate-occupancy",
                                       "surface vs volumetric triplane utilization");
    int occ_samples = 20000;
    occ_cmd->add_option("--ckpt", ckpt_path, "checkpoint")->required();
    occ_cmd->add_option("--seq", seq_path, "mesh sequence")->required();
    occ_cmd->add_option("--frame", frame, "frame index");
    occ_cmd->add_option("--samples", occ_samples, "shell sample count");
    occ_cmd->add_option("--seed", render_seed, "sampling seed");
    occ_cmd->add_option("--out", eval_out, "report CSV")->required();

    // bench -----------------------------------------------------------------------------
    auto* bench_cmd = app.add_subcommand("bench", "filtered vs unfiltered renderer cost");
    bench_cmd->add_option("--ckpt", ckpt_path, "checkpoint")->required();
    bench_cmd->add_option("--seq", seq_path, "mesh sequence")->required();
    bench_cmd->add_option("--camera", cam_path, "camera file")->required();
    bench_cmd->add_option("--frame", frame, "frame index");
    bench_cmd->add_option("--samples", n_samples, "ray samples");
    bench_cmd->add_option("--seed", render_seed, "sampling seed");
    bench_cmd->add_option("--out", eval_out, "bench CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }
    set_thread_count(threads);

    if (synth->parsed()) {
        ToyBodySpec spec = read_spec_file(spec_path);
        Dataset ds = make_toy_dataset(spec, image_size, train_cams, test_cams);
        save_dataset(out_dir, ds);
        std::cout << "wrote dataset: " << out_dir << " (" << ds.frames() << " frames, "
                  << ds.cameras.size() << " cameras)\n";
        return 0;
    }

    if (extract->parsed()) {
        require_file(seq_path);
        MeshSequence seq = io::read_mesh_sequence(seq_path);
        TrajectoryConfig traj = TrajectoryConfig::decayed(window, decay);
        fs::create_directories(motion_out);
        for (int t = 0; t < seq.frame_count(); ++t) {
            MeshFrame mesh = seq.frame(t);
            MotionState state = extract_motion_state(seq, t, traj);
            UvMap map = motion_to_uv(state, mesh, res, res);
            char name[64];
            std::snprintf(name, sizeof name, "motion_f%03d.fmap", t);
            io::write_uv_map((fs::path(motion_out) / name).string(), map);
        }
        std::cout << "wrote " << seq.frame_count() << " motion maps to " << motion_out << "\n";
        return 0;
    }

    if (train_cmd->parsed()) {
        if (!fs::exists(data_dir)) throw FileNotFoundError("no such dataset: " + data_dir);
        tc.seed = seed;
        tc.dynamics_cond = !no_dynamics;
        tc.predict_velocity = tc.predict_normal = !no_motion_pred;
        if (triplane_kind == "surface") tc.triplane_kind = TriplaneKind::Surface;
        else if (triplane_kind == "volumetric") tc.triplane_kind = TriplaneKind::Volumetric;
        else throw InvalidArgument("--triplane must be surface or volumetric");

        Dataset ds = load_dataset(data_dir);
        SurmoModel model(model_config_for(tc, ds), tc.seed);
        TrainResult result = train(model, ds, tc, csv_out);
        CheckpointBundle bundle{std::move(model), TrajectoryConfig::decayed(tc.window, tc.decay),
                                tc.decay, tc.dynamics_cond};
        save_checkpoint(ckpt_out, bundle);
        std::cout << "trained " << tc.steps << " steps: loss " << result.step0_loss << " -> "
                  << result.final_loss << "; checkpoint " << ckpt_out << "\n";
        return 0;
    }

    if (render_cmd->parsed()) {
        require_file(ckpt_path);
        require_file(seq_path);
        require_file(cam_path);
        CheckpointBundle bundle = load_checkpoint(ckpt_path);
        MeshSequence seq = io::read_mesh_sequence(seq_path);
        Camera cam = io::read_camera(cam_path);
        RenderConfig rc{n_samples, render_seed, !unfiltered};
        RenderedImage img = render_view(bundle.model, bundle, seq, frame, cam, rc);
        io::write_ppm(render_out, img.rgb);
        std::cout << "rendered frame " << frame << " -> " << render_out << " (" << img.rgb.width
                  << "x" << img.rgb.height << ")\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        require_file(ckpt_path);
        CheckpointBundle bundle = load_checkpoint(ckpt_path);
        Dataset ds = load_dataset(data_dir);
        std::vector<int> views;
        if (eval_cameras == "held-out") views = ds.test_views;
        else if (eval_cameras == "train") views = ds.train_views;
        else if (eval_cameras == "all") {
            views = ds.train_views;
            views.insert(views.end(), ds.test_views.begin(), ds.test_views.end());
        } else {
            throw InvalidArgument("--cameras must be held-out, train or all");
        }
        RenderConfig rc{n_samples, render_seed, true};
        std::vector<EvalRow> rows = evaluate(bundle.model, bundle, ds, views, stride, rc);
        std::ofstream f(eval_out);
        if (!f) throw FileNotFoundError("cannot write: " + eval_out);
        f.precision(9);
        f << "view,frame,psnr,ssim\n";
        double mean_psnr = 0, mean_ssim = 0;
        for (const auto& r : rows) {
            f << r.view << "," << r.frame << "," << r.psnr_db << "," << r.ssim_val << "\n";
            mean_psnr += r.psnr_db;
            mean_ssim += r.ssim_val;
        }
        std::cout << "eval " << rows.size() << " renders: mean PSNR "
                  << mean_psnr / double(rows.size()) << " dB, mean SSIM "
                  << mean_ssim / double(rows.size()) << " -> " << eval_out << "\n";
        return 0;
    }

    if (occ_cmd->parsed()) {
        require_file(ckpt_path);
        require_file(seq_path);
        CheckpointBundle bundle = load_checkpoint(ckpt_path);
        MeshSequence seq = io::read_mesh_sequence(seq_path);
        MeshFrame mesh = seq.frame(frame);
        FaceBvh bvh = build_bvh(mesh);
        const ModelConfig& mc = bundle.model.config();
        SurfaceTriplane surf = SurfaceTriplane::zeros(mc.uv_res, mc.plane_channels, mc.h_max);
        VolumetricTriplane vol =
            VolumetricTriplane::zeros(mc.uv_res, mc.plane_channels, mc.world_box);
        OccupancyStats s = occupancy_stats(surf, mesh, bvh, occ_samples, render_seed);
        OccupancyStats v = occupancy_stats(vol, mesh, bvh, occ_samples, mc.h_max, render_seed);
        std::ofstream f(eval_out);
        if (!f) throw FileNotFoundError("cannot write: " + eval_out);
        f.precision(9);
        f << "kind,plane0,plane1,plane2,mean\n";
        f << "surface," << s.plane_fraction[0] << "," << s.plane_fraction[1] << ","
          << s.plane_fraction[2] << "," << s.mean_fraction << "\n";
        f << "volumetric," << v.plane_fraction[0] << "," << v.plane_fraction[1] << ","
          << v.plane_fraction[2] << "," << v.mean_fraction << "\n";
        std::cout << "occupancy: surface " << s.mean_fraction << ", volumetric " << v.mean_fraction
                  << " -> " << eval_out << "\n";
        return 0;
    }

    if (bench_cmd->parsed()) {
        require_file(ckpt_path);
        require_file(seq_path);
        require_file(cam_path);
        CheckpointBundle bundle = load_checkpoint(ckpt_path);
        MeshSequence seq = io::read_mesh_sequence(seq_path);
        Camera cam = io::read_camera(cam_path);
        std::ofstream f(eval_out);
        if (!f) throw FileNotFoundError("cannot write: " + eval_out);
        f << "mode,rf_evals,total_samples,wall_ms\n";
        int64_t evals[2];
        for (int mode = 0; mode < 2; ++mode) {
            RenderConfig rc{n_samples, render_seed, mode == 0};
            auto start = std::chrono::steady_clock::now();
            RenderedImage img = render_view(bundle.model, bundle, seq, frame, cam, rc);
            double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
            evals[mode] = img.rf_evals;
            f << (mode == 0 ? "filtered" : "unfiltered") << "," << img.rf_evals << ","
              << img.total_samples << "," << ms << "\n";
        }
        double reduction = 1.0 - double(evals[0]) / double(evals[1]);
        f << "# eval reduction: " << reduction << "\n";
        std::cout << "bench: filtered " << evals[0] << " vs unfiltered " << evals[1]
                  << " radiance-field evals (reduction " << reduction << ") -> " << eval_out
                  << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const FileNotFoundError& e) {
        std::cerr << "error: missing-file: " << e.what() << "\n";
        return kExitMissingFile;
    } catch (const FormatError& e) {
        std::cerr << "error: format: " << e.what() << "\n";
        return kExitFormat;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return kExitRuntime;
    }
}
