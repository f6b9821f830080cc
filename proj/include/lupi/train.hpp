#pragma once

#include <functional>
#include <optional>

#include "lupi/metrics.hpp"
#include "lupi/optimizer.hpp"
#include "lupi/patch.hpp"
#include "lupi/unet.hpp"

namespace lupi {

enum class Precision { f32, f64 };

Precision precision_from_string(const std::string& s);
std::string to_string(Precision p);

struct TrainConfig {
    double alpha = 0.6;  // PI runs only
    int64_t epochs = 1;
    int64_t batch_size = 8;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    uint64_t seed = 0;
    Precision precision = Precision::f32;
    int64_t max_steps = 0;  // optional cap for desk-scale runs; 0 = all epochs
    bool quiet = false;     // suppress per-epoch stderr lines

    void validate() const;
};

struct EpochStats {
    int64_t epoch = 0;
    double train_loss = 0.0;  // mean over the epoch's batches
    double val_f1 = std::numeric_limits<double>::quiet_NaN();
};

template <class T>
struct TrainedModel {
    UNetModel<T> model;
    std::vector<EpochStats> history;
    TrainConfig config;
};

// Patches tensorized once up front; all samples must share dimensions.
template <class T>
struct TensorDataset {
    int64_t channels = 0, height = 0, width = 0;
    std::vector<std::vector<T>> inputs;   // per sample, channels*H*W
    std::vector<std::vector<T>> targets;  // per sample, 2*H*W one-hot [healthy, tumor]
    std::vector<MaskImage> truths;

    int64_t size() const { return static_cast<int64_t>(inputs.size()); }
};

template <class T>
TensorDataset<T> tensorize_student(std::span<const PatchRecord> patches);
template <class T>
TensorDataset<T> tensorize_teacher(std::span<const EnhancedPatch> patches);

// Pixel-argmax prediction masks for the whole dataset, computed in eval mode.
template <class T>
std::vector<MaskImage> predict_masks(UNetModel<T>& model, const TensorDataset<T>& data,
                                     int64_t batch_size);

template <class T>
double evaluate_f1(UNetModel<T>& model, const TensorDataset<T>& data, int64_t batch_size,
                   F1Aggregation aggregation = F1Aggregation::micro);

// Called after every optimizer step; used for trajectory audits.
template <class T>
using StepObserver = std::function<void(int64_t step, const UNetModel<T>&)>;

// Teacher on the enhanced 3-channel dataset, minimizing CE against the truth.
template <class T>
TrainedModel<T> train_teacher(const std::vector<EnhancedPatch>& dataset, int64_t base_width,
                              const TrainConfig& config,
                              const std::vector<EnhancedPatch>* validation = nullptr,
                              const StepObserver<T>& observer = {});

// Baseline student on raw 1-channel patches.
template <class T>
TrainedModel<T> train_student(const std::vector<PatchRecord>& dataset, int64_t base_width,
                              const TrainConfig& config,
                              const std::vector<PatchRecord>* validation = nullptr,
                              const StepObserver<T>& observer = {});

// Privileged-information student: the i-th enhanced patch must be the
// enhancement of the i-th raw patch (channel 0 bit-identical, PairingError
// otherwise). The frozen teacher provides per-batch soft targets computed in
// eval mode off the tape; the trained model performs inference on raw patches
// only.
template <class T>
TrainedModel<T> train_pi_student(const std::vector<PatchRecord>& dataset,
                                 const std::vector<EnhancedPatch>& enhanced_twins,
                                 UNetModel<T>& teacher, int64_t base_width,
                                 const TrainConfig& config,
                                 const std::vector<PatchRecord>* validation = nullptr,
                                 const StepObserver<T>& observer = {});

std::vector<EnhancedPatch> enhance_all(std::span<const PatchRecord> patches);

}  // namespace lupi
