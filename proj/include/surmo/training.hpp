#pragma once

#include <optional>
#include <string>
#include <vector>

#include "surmo/io.hpp"
#include "surmo/model.hpp"
#include "surmo/motion.hpp"
#include "surmo/renderer.hpp"
#include "surmo/synth.hpp"

namespace surmo {

// Loss weights. vgg/adv/face mirror the full seven-weight ledger but have no
// backing networks here and stay inactive.
struct LossWeights {
    double pix = 0.5;
    double velocity = 1.0;
    double normal = 1.0;
    double vol = 15.0;
    double vgg = 10.0;   // inactive
    double adv = 1.0;    // inactive
    double face = 5.0;   // inactive
};

// Multi-view sequence with ground-truth renders; the training and eval unit.
struct Dataset {
    MeshSequence seq;
    std::vector<Camera> cameras;
    std::vector<int> train_views;
    std::vector<int> test_views;
    std::vector<io::Image> images;  // images[view * frames + frame]
    double h_max = 0.1;
    Box3d world_box;

    int frames() const { return seq.frame_count(); }
    const io::Image& image(int view, int frame) const {
        return images[size_t(view) * size_t(frames()) + size_t(frame)];
    }
    int image_width() const { return cameras.empty() ? 0 : cameras[0].width; }
    int image_height() const { return cameras.empty() ? 0 : cameras[0].height; }
};

// Builds the default toy dataset: 4 training + 2 held-out cameras on a ring.
Dataset make_toy_dataset(const ToyBodySpec& spec, int image_size = 96, int train_cams = 4,
                         int test_cams = 2);

void save_dataset(const std::string& dir, const Dataset& ds);
Dataset load_dataset(const std::string& dir);

struct TrainConfig {
    int steps = 2000;
    double lr = 1e-3;
    uint64_t seed = 0;
    int uv_res = 64;       // motion map / triplane resolution for training
    int n_samples = 32;    // ray samples per render during training
    int log_interval = 10;
    // Ablation switches (Table "AbMotion" axes).
    bool dynamics_cond = true;    // false zeroes the V/T input channels
    bool predict_velocity = true;
    bool predict_normal = true;
    TriplaneKind triplane_kind = TriplaneKind::Surface;
    int window = 5;
    double decay = 0.8;
    LossWeights weights;
    // Model widths.
    int enc_base = 16;
    int plane_channels = 16;
    int rf_hidden = 32;
    int feat_channels = 16;
    int sr_hidden = 16;
};

// Weights + everything inference needs (trajectory config, ablation flags).
struct CheckpointBundle {
    SurmoModel model;
    TrajectoryConfig trajectory;
    double decay = 0.8;
    bool dynamics_cond = true;
};

void save_checkpoint(const std::string& path, const CheckpointBundle& bundle);
CheckpointBundle load_checkpoint(const std::string& path);

ModelConfig model_config_for(const TrainConfig& cfg, const Dataset& ds);

struct TrainLogRow {
    int step;
    double loss_total, loss_pix, loss_vel, loss_norm, loss_vol, psnr;
};

struct TrainResult {
    std::vector<TrainLogRow> log;
    double step0_loss = 0.0;
    double final_loss = 0.0;

    std::string csv() const;
};

// End-to-end optimization of all four components. Deterministic given the
// seed; throws NumericError with diagnostics if the loss goes non-finite.
TrainResult train(SurmoModel& model, const Dataset& ds, const TrainConfig& cfg,
                  const std::string& csv_path = "");

// --- inference helpers ---------------------------------------------------------

struct RenderedImage {
    io::Image rgb;       // super-resolved output
    io::Image feature;   // low-res feature image (first 3 channels RGB)
    io::Image opacity;   // low-res accumulated opacity, 1 channel
    int64_t rf_evals = 0;
    int64_t total_samples = 0;
};

// Renders frame t of a sequence under a camera. The low-res pass runs at
// half the camera resolution and the x2 head restores it.
RenderedImage render_view(SurmoModel& model, const CheckpointBundle& bundle,
                          const MeshSequence& seq, int frame, const Camera& cam,
                          const RenderConfig& rc);

// --- metrics ----------------------------------------------------------------------

// 10*log10(1/MSE) for images in [0,1]; capped at 99 dB when MSE < 1e-10.
double psnr(const io::Image& a, const io::Image& b);

// Mean SSIM, 11x11 Gaussian window (sigma 1.5), standard stabilizers,
// computed over pixels whose window fits inside the image.
double ssim(const io::Image& a, const io::Image& b);

// Mean of factor x factor blocks.
io::Image downsample_area(const io::Image& img, int factor);

struct EvalRow {
    int view, frame;
    double psnr_db, ssim_val;
};

std::vector<EvalRow> evaluate(SurmoModel& model, const CheckpointBundle& bundle, const Dataset& ds,
                              const std::vector<int>& views, int frame_stride = 1,
                              const RenderConfig& rc = {});

// Mean L1 between rendered and ground-truth images over the given views
// (the validation pixel loss used by the ablation comparisons).
double eval_pixel_loss(SurmoModel& model, const CheckpointBundle& bundle, const Dataset& ds,
                       const std::vector<int>& views, int frame_stride = 4);

}  // namespace surmo
