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

namespace cajscc::train {

struct EvalOptions {
    double mu_db = 10.0;
    csi::EstimatorKind estimator = csi::EstimatorKind::Mmse;
    std::size_t realizations = 10;  // channel realizations per image
    std::uint64_t seed = 1;
    std::size_t batch_size = 64;
    std::size_t threads = 0;  // 0: hardware concurrency
};

struct EvalReport {
    double mu_db = 0.0;
    double psnr_mean = 0.0;
    double psnr_stderr = 0.0;
    std::size_t n = 0;
    std::size_t realizations = 0;
    csi::EstimatorKind estimator = csi::EstimatorKind::Mmse;
};

// Mean PSNR over images x realizations in eval mode. Sample (i, r) draws its
// channel and noise from streams keyed by i * realizations + r, so the report
// does not depend on batching or thread count.
EvalReport evaluate(model::CajsccModel& model, const phy::OfdmConfig& ofdm, const data::ImageSet& test,
                    const EvalOptions& options);

std::vector<EvalReport> sweep_snr(model::CajsccModel& model, const phy::OfdmConfig& ofdm,
                                  const data::ImageSet& test, std::span<const double> mu_list,
                                  const EvalOptions& options);

// mu_db,psnr_mean,psnr_stderr,n
void write_sweep_csv(std::span<const EvalReport> reports, const std::string& path);
std::vector<EvalReport> read_sweep_csv(const std::string& path);

struct PowerRow {
    std::size_t subcarrier = 0;  // sorted slot index
    double mean_gain = 0.0;      // mean sorted |h_k|
    double mean_power = 0.0;     // mean |Y|^2 over symbols and images
};

struct PowerReport {
    std::vector<PowerRow> rows;
    double spearman = 0.0;  // rank correlation of mean_gain vs mean_power
};

PowerReport power_allocation_report(model::CajsccModel& model, const phy::OfdmConfig& ofdm,
                                    const data::ImageSet& test, const EvalOptions& options);
// subcarrier_idx,mean_gain,mean_power
void write_power_csv(const PowerReport& report, const std::string& path);

// Spearman rank correlation with average ranks for ties; 0 if either side
// is constant.
double spearman(std::span<const double> a, std::span<const double> b);

struct MismatchEntry {
    csi::EstimatorKind train_csi = csi::EstimatorKind::Perfect;
    csi::EstimatorKind test_csi = csi::EstimatorKind::Perfect;
    EvalReport report;
};

// Rows: models trained with perfect and MMSE CSI; columns: test estimators
// perfect, MMSE, LS; repeated for each mu.
std::vector<MismatchEntry> csi_mismatch_eval(model::CajsccModel& trained_perfect, model::CajsccModel& trained_mmse,
                                             const phy::OfdmConfig& ofdm, const data::ImageSet& test,
                                             std::span<const double> mu_list, const EvalOptions& options);
// train_csi,test_csi,mu_db,psnr_mean,psnr_stderr
void write_mismatch_csv(std::span<const MismatchEntry> entries, const std::string& path);

struct EstimatorBenchRow {
    double mu_db = 0.0;
    double mse_ls = 0.0;
    double mse_mmse = 0.0;
    std::size_t n = 0;  // trials x subcarriers
};

// Monte-Carlo per-subcarrier estimation MSE of LS and MMSE against the true
// Rayleigh response, pilots through the frame's channel.
std::vector<EstimatorBenchRow> estimator_bench(const phy::OfdmConfig& ofdm, std::span<const double> mu_list,
                                               std::size_t trials, std::uint64_t seed);
// mu_db,mse_ls,mse_mmse,n
void write_bench_csv(std::span<const EstimatorBenchRow> rows, const std::string& path);

// Shortest round-trip decimal form used in every CSV.
std::string format_double(double v);

}  // namespace cajscc::train
