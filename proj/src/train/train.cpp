#include "lupi/train.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "lupi/losses.hpp"
#include "lupi/rng.hpp"

namespace lupi {

Precision precision_from_string(const std::string& s) {
    if (s == "f32" || s == "32" || s == "float32") return Precision::f32;
    if (s == "f64" || s == "64" || s == "float64") return Precision::f64;
    throw ArgumentError("unknown precision '" + s + "' (want f32 or f64)");
}

std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

void TrainConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("TrainConfig: alpha outside [0,1]");
    if (epochs < 1) throw ArgumentError("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw ArgumentError("TrainConfig: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ArgumentError("TrainConfig: learning_rate must be > 0");
    if (max_steps < 0) throw ArgumentError("TrainConfig: max_steps must be >= 0");
}

namespace {

using nn::BnMode;
using nn::make_node;
using nn::NodePtr;
using nn::Tape;

template <class T>
void append_sample(TensorDataset<T>& ds, std::span<const GrayImage* const> channels,
                   const MaskImage& mask) {
    const int64_t h = channels[0]->height, w = channels[0]->width;
    const int64_t c = static_cast<int64_t>(channels.size());
    if (ds.inputs.empty()) {
        ds.channels = c;
        ds.height = h;
        ds.width = w;
    } else if (ds.channels != c || ds.height != h || ds.width != w) {
        throw ArgumentError("tensorize: patches must share dimensions");
    }
    if (mask.width != w || mask.height != h)
        throw ArgumentError("tensorize: mask/image dimension mismatch");

    std::vector<T> input(static_cast<size_t>(c * h * w));
    for (int64_t ch = 0; ch < c; ++ch) {
        const auto& img = *channels[static_cast<size_t>(ch)];
        for (int64_t i = 0; i < h * w; ++i)
            input[static_cast<size_t>(ch * h * w + i)] = static_cast<T>(img.data[static_cast<size_t>(i)]);
    }
    std::vector<T> target(static_cast<size_t>(2 * h * w));
    for (int64_t i = 0; i < h * w; ++i) {
        const T tumor = static_cast<T>(mask.labels[static_cast<size_t>(i)]);
        target[static_cast<size_t>(i)] = T(1) - tumor;      // healthy channel
        target[static_cast<size_t>(h * w + i)] = tumor;     // tumor channel
    }
    ds.inputs.push_back(std::move(input));
    ds.targets.push_back(std::move(target));
    ds.truths.push_back(mask);
}

template <class T>
NodePtr<T> stack_rows(const std::vector<std::vector<T>>& rows, std::span<const int64_t> indices,
                      int64_t c, int64_t h, int64_t w) {
    auto node = make_node<T>({static_cast<int64_t>(indices.size()), c, h, w});
    const size_t stride = static_cast<size_t>(c * h * w);
    for (size_t i = 0; i < indices.size(); ++i)
        std::copy(rows[static_cast<size_t>(indices[i])].begin(),
                  rows[static_cast<size_t>(indices[i])].end(), node->value.begin() + i * stride);
    return node;
}

// One mini-batch loss; builds the forward pass on the supplied tape.
template <class T>
using BatchLossFn = std::function<NodePtr<T>(Tape<T>&, UNetModel<T>&, std::span<const int64_t>)>;

template <class T>
TrainedModel<T> run_training(UNetModel<T> model, int64_t sample_count,
                             const BatchLossFn<T>& batch_loss, const TrainConfig& config,
                             const std::function<double(UNetModel<T>&)>& val_eval,
                             const StepObserver<T>& observer, const char* label) {
    config.validate();
    if (sample_count < 1) throw ArgumentError("training: empty dataset");

    std::vector<NodePtr<T>> params;
    for (auto& [name, node] : model.parameters()) params.push_back(node);
    Optimizer<T> opt(config.optimizer, static_cast<T>(config.learning_rate), params);

    Rng shuffle_rng = Rng(config.seed).child("shuffle");
    std::vector<int64_t> order(static_cast<size_t>(sample_count));
    TrainedModel<T> result;
    result.config = config;

    int64_t step = 0;
    bool stop = false;
    for (int64_t epoch = 1; epoch <= config.epochs && !stop; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        for (int64_t i = 0; i < sample_count; ++i) order[static_cast<size_t>(i)] = i;
        shuffle_rng.shuffle(order.begin(), order.end());

        double loss_sum = 0.0;
        int64_t batch_count = 0;
        for (int64_t pos = 0; pos < sample_count && !stop; pos += config.batch_size) {
            const int64_t end = std::min(pos + config.batch_size, sample_count);
            std::span<const int64_t> indices(order.data() + pos,
                                             static_cast<size_t>(end - pos));
            Tape<T> tape;
            auto loss = batch_loss(tape, model, indices);
            const double loss_value = static_cast<double>(loss->value[0]);
            if (!std::isfinite(loss_value))
                throw NumericError(std::string(label) + ": non-finite loss at step " +
                                   std::to_string(step + 1));
            tape.backward(loss);
            opt.step();
            ++step;
            loss_sum += loss_value;
            ++batch_count;
            if (observer) observer(step, model);
            if (config.max_steps > 0 && step >= config.max_steps) stop = true;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = batch_count > 0 ? loss_sum / static_cast<double>(batch_count)
                                           : std::numeric_limits<double>::quiet_NaN();
        if (val_eval) stats.val_f1 = val_eval(model);
        result.history.push_back(stats);

        if (!config.quiet) {
            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
                    .count();
            std::cerr << label << " epoch=" << epoch << " train_loss=" << stats.train_loss
                      << " val_f1=" << stats.val_f1 << " wall_s=" << wall << "\n";
        }
    }
    result.model = std::move(model);
    return result;
}

template <class T>
std::function<double(UNetModel<T>&)> make_val_eval(std::shared_ptr<TensorDataset<T>> val,
                                                   int64_t batch_size) {
    if (!val || val->size() == 0) return {};
    return [val, batch_size](UNetModel<T>& m) { return evaluate_f1(m, *val, batch_size); };
}

}  // namespace

template <class T>
TensorDataset<T> tensorize_student(std::span<const PatchRecord> patches) {
    TensorDataset<T> ds;
    for (const auto& p : patches) {
        const GrayImage* channels[1] = {&p.image};
        append_sample(ds, channels, p.mask);
    }
    return ds;
}

template <class T>
TensorDataset<T> tensorize_teacher(std::span<const EnhancedPatch> patches) {
    TensorDataset<T> ds;
    for (const auto& p : patches) {
        const GrayImage* channels[3] = {&p.channels[0], &p.channels[1], &p.channels[2]};
        append_sample(ds, channels, p.mask);
    }
    return ds;
}

template <class T>
std::vector<MaskImage> predict_masks(UNetModel<T>& model, const TensorDataset<T>& data,
                                     int64_t batch_size) {
    if (data.size() == 0) throw ArgumentError("predict_masks: empty dataset");
    std::vector<MaskImage> preds;
    preds.reserve(static_cast<size_t>(data.size()));
    const int64_t hw = data.height * data.width;
    for (int64_t pos = 0; pos < data.size(); pos += batch_size) {
        const int64_t end = std::min(pos + batch_size, data.size());
        std::vector<int64_t> indices;
        for (int64_t i = pos; i < end; ++i) indices.push_back(i);
        auto x = stack_rows(data.inputs, indices, data.channels, data.height, data.width);
        auto probs = model.forward(nullptr, x, BnMode::eval);
        for (int64_t b = 0; b < end - pos; ++b) {
            MaskImage m = MaskImage::zeros(static_cast<int>(data.width),
                                           static_cast<int>(data.height));
            const T* healthy = probs->value.data() + (b * 2) * hw;
            const T* tumor = healthy + hw;
            for (int64_t i = 0; i < hw; ++i)
                m.labels[static_cast<size_t>(i)] = tumor[i] > healthy[i] ? 1 : 0;
            preds.push_back(std::move(m));
        }
    }
    return preds;
}

template <class T>
double evaluate_f1(UNetModel<T>& model, const TensorDataset<T>& data, int64_t batch_size,
                   F1Aggregation aggregation) {
    const auto preds = predict_masks(model, data, batch_size);
    return aggregation == F1Aggregation::micro ? f1_score(preds, data.truths)
                                               : f1_score_macro(preds, data.truths);
}

std::vector<EnhancedPatch> enhance_all(std::span<const PatchRecord> patches) {
    std::vector<EnhancedPatch> out;
    out.reserve(patches.size());
    for (const auto& p : patches) out.push_back(enhance_patch(p));
    return out;
}

template <class T>
TrainedModel<T> train_teacher(const std::vector<EnhancedPatch>& dataset, int64_t base_width,
                              const TrainConfig& config,
                              const std::vector<EnhancedPatch>* validation,
                              const StepObserver<T>& observer) {
    if (dataset.empty()) throw ArgumentError("train_teacher: empty dataset");
    auto ds = std::make_shared<TensorDataset<T>>(tensorize_teacher<T>(dataset));
    auto val = validation ? std::make_shared<TensorDataset<T>>(tensorize_teacher<T>(*validation))
                          : nullptr;
    UNetConfig arch{.in_channels = 3, .base_width = base_width};
    auto model = UNetModel<T>::init(arch, config.seed);

    BatchLossFn<T> loss_fn = [ds](Tape<T>& tape, UNetModel<T>& m,
                                  std::span<const int64_t> idx) {
        auto x = stack_rows(ds->inputs, idx, ds->channels, ds->height, ds->width);
        auto y = stack_rows(ds->targets, idx, 2, ds->height, ds->width);
        auto probs = m.forward(&tape, x, BnMode::train);
        return student_loss(&tape, probs, y);
    };
    return run_training(std::move(model), ds->size(), loss_fn, config,
                        make_val_eval(val, config.batch_size), observer, "teacher");
}

template <class T>
TrainedModel<T> train_student(const std::vector<PatchRecord>& dataset, int64_t base_width,
                              const TrainConfig& config,
                              const std::vector<PatchRecord>* validation,
                              const StepObserver<T>& observer) {
    if (dataset.empty()) throw ArgumentError("train_student: empty dataset");
    auto ds = std::make_shared<TensorDataset<T>>(tensorize_student<T>(dataset));
    auto val = validation ? std::make_shared<TensorDataset<T>>(tensorize_student<T>(*validation))
                          : nullptr;
    UNetConfig arch{.in_channels = 1, .base_width = base_width};
    auto model = UNetModel<T>::init(arch, config.seed);

    BatchLossFn<T> loss_fn = [ds](Tape<T>& tape, UNetModel<T>& m,
                                  std::span<const int64_t> idx) {
        auto x = stack_rows(ds->inputs, idx, ds->channels, ds->height, ds->width);
        auto y = stack_rows(ds->targets, idx, 2, ds->height, ds->width);
        auto probs = m.forward(&tape, x, BnMode::train);
        return student_loss(&tape, probs, y);
    };
    return run_training(std::move(model), ds->size(), loss_fn, config,
                        make_val_eval(val, config.batch_size), observer, "student");
}

template <class T>
TrainedModel<T> train_pi_student(const std::vector<PatchRecord>& dataset,
                                 const std::vector<EnhancedPatch>& enhanced_twins,
                                 UNetModel<T>& teacher, int64_t base_width,
                                 const TrainConfig& config,
                                 const std::vector<PatchRecord>* validation,
                                 const StepObserver<T>& observer) {
    if (dataset.empty()) throw ArgumentError("train_pi_student: empty dataset");
    if (dataset.size() != enhanced_twins.size())
        throw PairingError("train_pi_student: raw/enhanced counts differ");
    for (size_t i = 0; i < dataset.size(); ++i)
        if (!(enhanced_twins[i].channels[0] == dataset[i].image))
            throw PairingError("train_pi_student: enhanced patch " + std::to_string(i) +
                               " channel 0 does not match its raw twin");
    if (teacher.config.in_channels != 3)
        throw ArgumentError("train_pi_student: teacher must take 3 input channels");

    auto ds = std::make_shared<TensorDataset<T>>(tensorize_student<T>(dataset));
    auto tds = std::make_shared<TensorDataset<T>>(tensorize_teacher<T>(enhanced_twins));
    auto val = validation ? std::make_shared<TensorDataset<T>>(tensorize_student<T>(*validation))
                          : nullptr;
    UNetConfig arch{.in_channels = 1, .base_width = base_width};
    auto model = UNetModel<T>::init(arch, config.seed);
    const T alpha = static_cast<T>(config.alpha);

    UNetModel<T>* teacher_ptr = &teacher;
    BatchLossFn<T> loss_fn = [ds, tds, teacher_ptr, alpha](Tape<T>& tape, UNetModel<T>& m,
                                                           std::span<const int64_t> idx) {
        auto x = stack_rows(ds->inputs, idx, ds->channels, ds->height, ds->width);
        auto y = stack_rows(ds->targets, idx, 2, ds->height, ds->width);
        auto xt = stack_rows(tds->inputs, idx, tds->channels, tds->height, tds->width);
        // Teacher soft targets, recomputed per batch off the tape.
        auto teacher_probs = teacher_ptr->forward(nullptr, xt, BnMode::eval);
        auto probs = m.forward(&tape, x, BnMode::train);
        return pi_loss(&tape, probs, teacher_probs, y, alpha);
    };
    return run_training(std::move(model), ds->size(), loss_fn, config,
                        make_val_eval(val, config.batch_size), observer, "pi-student");
}

#define LUPI_INSTANTIATE_TRAIN(T)                                                              \
    template TensorDataset<T> tensorize_student<T>(std::span<const PatchRecord>);              \
    template TensorDataset<T> tensorize_teacher<T>(std::span<const EnhancedPatch>);            \
    template std::vector<MaskImage> predict_masks<T>(UNetModel<T>&, const TensorDataset<T>&,   \
                                                     int64_t);                                 \
    template double evaluate_f1<T>(UNetModel<T>&, const TensorDataset<T>&, int64_t,           \
                                   F1Aggregation);                                             \
    template TrainedModel<T> train_teacher<T>(const std::vector<EnhancedPatch>&, int64_t,      \
                                              const TrainConfig&,                              \
                                              const std::vector<EnhancedPatch>*,               \
                                              const StepObserver<T>&);                         \
    template TrainedModel<T> train_student<T>(const std::vector<PatchRecord>&, int64_t,        \
                                              const TrainConfig&,                              \
                                              const std::vector<PatchRecord>*,                 \
                                              const StepObserver<T>&);                         \
    template TrainedModel<T> train_pi_student<T>(const std::vector<PatchRecord>&,              \
                                                 const std::vector<EnhancedPatch>&,            \
                                                 UNetModel<T>&, int64_t, const TrainConfig&,   \
                                                 const std::vector<PatchRecord>*,              \
                                                 const StepObserver<T>&);

LUPI_INSTANTIATE_TRAIN(float)
LUPI_INSTANTIATE_TRAIN(double)

}  // namespace lupi
