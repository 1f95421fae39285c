#include "train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "common/error.hpp"
#include "train/evaluation.hpp"
#include "train/link.hpp"

namespace cajscc::train {

SnrSchedule SnrSchedule::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    try {
        if (parts.size() == 2 && parts[0] == "fixed") return fixed_at(std::stod(parts[1]));
        if (parts.size() == 3 && parts[0] == "uniform") {
            const SnrSchedule s = uniform(std::stod(parts[1]), std::stod(parts[2]));
            if (s.lo > s.hi) throw ConfigError("train.snr: lower bound exceeds upper bound");
            return s;
        }
    } catch (const std::logic_error&) {
    }
    throw ConfigError("train.snr must be fixed:<dB> or uniform:<lo>:<hi>, got '" + text + "'");
}

std::string SnrSchedule::str() const {
    std::ostringstream os;
    os.precision(17);
    if (fixed) {
        os << "fixed:" << lo;
    } else {
        os << "uniform:" << lo << ':' << hi;
    }
    return os.str();
}

double SnrSchedule::sample(Rng& rng) const { return fixed ? lo : rng.uniform(lo, hi); }

std::vector<double> SnrSchedule::validation_points() const {
    if (fixed || lo == hi) return {lo};
    std::vector<double> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(lo + (hi - lo) * i / 4.0);
    return pts;
}

void TrainConfig::validate() const {
    if (!snr.fixed && snr.lo > snr.hi) throw ConfigError("train.snr: lower bound exceeds upper bound");
    if (batch_size == 0) throw ConfigError("train.batch must be at least 1");
    if (max_epochs == 0) throw ConfigError("train.epochs must be at least 1");
    if (patience == 0) throw ConfigError("train.patience must be at least 1");
    if (!(adam.lr > 0.0)) throw ConfigError("train.lr must be positive");
    if (val_realizations == 0) throw ConfigError("train.val_realizations must be at least 1");
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
    if (patience == 0) throw ConfigError("early stopping patience must be at least 1");
}

bool EarlyStopping::update(double metric) {
    const std::size_t index = seen_++;
    if (index == 0 || metric > best_) {
        best_ = metric;
        best_index_ = index;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

Trainer::Trainer(model::CajsccModel& model, phy::OfdmConfig ofdm, TrainConfig config)
    : model_(model), ofdm_(ofdm), config_(config) {
    ofdm_.validate();
    config_.validate();
    if (ofdm_.l_f != model_.config().l_f || ofdm_.n_s != model_.config().n_s) {
        throw ConfigError("trainer: OFDM configuration does not match the model's L_f / N_s");
    }
}

double Trainer::train_step(const data::ImageSet& images, std::span<const std::size_t> batch) {
    Rng snr_rng(config_.seed, "snr", step_);
    const double mu = config_.snr.sample(snr_rng);
    std::vector<LinkDraw> draws;
    draws.reserve(batch.size());
    const std::uint64_t first_counter = images_seen_;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        Rng channel_rng(config_.seed, "channel", images_seen_ + b);
        Rng noise_rng(config_.seed, "noise", images_seen_ + b);
        draws.push_back(draw_link(ofdm_, config_.estimator, mu, channel_rng, noise_rng));
    }
    images_seen_ += batch.size();

    const nn::Tensor x = images.batch(batch);
    model_.params().zero_grad();
    nn::Tape tape;
    double value = 0.0;
    {
        nn::Tape::Scope scope(tape);
        const LinkOutput out = run_link(model_, x, draws, nn::Mode::Train);
        nn::Tensor loss = nn::mse_loss(out.reconstruction, x);
        value = loss.item();
        if (!std::isfinite(value)) {
            std::ostringstream os;
            os << "non-finite training loss at step " << step_ << " (mu = " << mu
               << " dB, channel stream counter " << first_counter << ")";
            throw TrainingError(os.str());
        }
        tape.backward(loss);
    }
    nn::adam_step(model_.params(), config_.adam);
    ++step_;
    return value;
}

double Trainer::validation_psnr(const data::ImageSet& validation) {
    const auto points = config_.snr.validation_points();
    double total = 0.0;
    for (double mu : points) {
        EvalOptions opt;
        opt.mu_db = mu;
        opt.estimator = config_.estimator;
        opt.realizations = config_.val_realizations;
        opt.seed = derive_seed(config_.seed, "validation");
        total += evaluate(model_, ofdm_, validation, opt).psnr_mean;
    }
    return total / static_cast<double>(points.size());
}

FitResult Trainer::fit(const data::ImageSet& train, const data::ImageSet& validation) {
    if (train.empty() || validation.empty()) throw TrainingError("fit: training and validation sets must be non-empty");
    FitResult result;
    result.initial_val_psnr = validation_psnr(validation);

    EarlyStopping stopper(config_.patience);
    auto best = model_.params().snapshot();
    std::vector<std::size_t> order(train.count());
    for (std::size_t epoch = 1; epoch <= config_.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng data_rng(config_.seed, "data", epoch);
        std::shuffle(order.begin(), order.end(), data_rng.engine());

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
            const std::size_t len = std::min(config_.batch_size, order.size() - start);
            loss_sum += train_step(train, std::span<const std::size_t>(order).subspan(start, len));
            ++batches;
        }
        const double val = validation_psnr(validation);
        result.history.push_back({epoch, loss_sum / static_cast<double>(batches), val});
        if (stopper.update(val)) {
            best = model_.params().snapshot();
            result.best_epoch = epoch;
            result.best_val_psnr = val;
        }
        if (stopper.should_stop()) break;
    }
    model_.params().restore(best);
    return result;
}

}  // namespace cajscc::train
