#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csi/estimation.hpp"
#include "data/dataset.hpp"
#include "model/cajscc_model.hpp"
#include "phy/ofdm.hpp"
#include "tensor/parameters.hpp"

namespace cajscc::train {

// Training SNR: a fixed mu, or mu ~ U[lo, hi] dB drawn once per batch.
struct SnrSchedule {
    bool fixed = false;
    double lo = 0.0;
    double hi = 20.0;

    static SnrSchedule fixed_at(double mu_db) { return {true, mu_db, mu_db}; }
    static SnrSchedule uniform(double lo, double hi) { return {false, lo, hi}; }
    // "fixed:<mu>" or "uniform:<lo>:<hi>".
    static SnrSchedule parse(const std::string& text);
    std::string str() const;
    double sample(Rng& rng) const;
    // mu values used for validation: {mu} or five evenly spaced points.
    std::vector<double> validation_points() const;
};

struct TrainConfig {
    SnrSchedule snr = SnrSchedule::uniform(0.0, 20.0);
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    csi::EstimatorKind estimator = csi::EstimatorKind::Mmse;
    std::uint64_t seed = 1;
    nn::AdamOptions adam{};
    std::size_t val_realizations = 2;

    void validate() const;
};

// Stops once `patience` consecutive epochs fail to improve on the best.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience);
    // Returns true when `metric` is a new best.
    bool update(double metric);
    bool should_stop() const { return since_best_ >= patience_; }
    double best() const { return best_; }
    std::size_t best_index() const { return best_index_; }

private:
    std::size_t patience_;
    std::size_t seen_ = 0;
    std::size_t since_best_ = 0;
    std::size_t best_index_ = 0;
    double best_ = 0.0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_psnr = 0.0;
};

struct FitResult {
    double initial_val_psnr = 0.0;  // untrained model, same protocol
    double best_val_psnr = 0.0;
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> history;
};

class Trainer {
public:
    Trainer(model::CajsccModel& model, phy::OfdmConfig ofdm, TrainConfig config);

    // One Adam step on the mean MSE of the batch. Throws TrainingError on a
    // non-finite loss, naming the batch SNR and channel stream counter.
    double train_step(const data::ImageSet& images, std::span<const std::size_t> batch);

    // Mean PSNR over the validation protocol (eval mode, fixed seed).
    double validation_psnr(const data::ImageSet& validation);

    // Epoch loop with early stopping; the model ends holding the
    // best-validation parameters.
    FitResult fit(const data::ImageSet& train, const data::ImageSet& validation);

    std::uint64_t steps() const { return step_; }

private:
    model::CajsccModel& model_;
    phy::OfdmConfig ofdm_;
    TrainConfig config_;
    std::uint64_t step_ = 0;
    std::uint64_t images_seen_ = 0;
};

}  // namespace cajscc::train
