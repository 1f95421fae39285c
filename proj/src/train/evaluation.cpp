#include "train/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "common/error.hpp"
#include "train/link.hpp"
#include "train/metrics.hpp"

namespace cajscc::train {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_csv(const std::string& path, const char* header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << header << '\n';
    return out;
}

void close_csv(std::ofstream& out, const std::string& path) {
    out.close();
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
    std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs fn(job) for job in [0, jobs) on a small pool; fn writes disjoint outputs.
template <typename Fn>
void parallel_for(std::size_t jobs, std::size_t threads, Fn fn) {
    const std::size_t workers = worker_count(threads, jobs);
    if (workers <= 1) {
        for (std::size_t j = 0; j < jobs; ++j) fn(j);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t j = w; j < jobs; j += workers) fn(j);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

LinkDraw eval_draw(const phy::OfdmConfig& ofdm, const EvalOptions& opt, std::uint64_t counter) {
    Rng channel_rng(opt.seed, "eval-channel", counter);
    Rng noise_rng(opt.seed, "eval-noise", counter);
    return draw_link(ofdm, opt.estimator, opt.mu_db, channel_rng, noise_rng);
}

}  // namespace

EvalReport evaluate(model::CajsccModel& model, const phy::OfdmConfig& ofdm, const data::ImageSet& test,
                    const EvalOptions& opt) {
    if (opt.realizations == 0) throw ConfigError("eval.realizations must be at least 1");
    if (opt.batch_size == 0) throw ConfigError("evaluation batch size must be at least 1");
    if (test.empty()) throw ConfigError("evaluation set is empty");
    const std::size_t total = test.count() * opt.realizations;
    const std::size_t chunks = (total + opt.batch_size - 1) / opt.batch_size;
    const std::size_t pixels = test.shape().size();
    std::vector<double> psnrs(total);

    parallel_for(chunks, opt.threads, [&](std::size_t chunk) {
        const std::size_t begin = chunk * opt.batch_size;
        const std::size_t end = std::min(total, begin + opt.batch_size);
        std::vector<std::size_t> images;
        std::vector<LinkDraw> draws;
        for (std::size_t s = begin; s < end; ++s) {
            images.push_back(s / opt.realizations);
            draws.push_back(eval_draw(ofdm, opt, s));
        }
        const nn::Tensor x = test.batch(images);
        const LinkOutput out = run_link(model, x, draws, nn::Mode::Eval);
        const auto xs = x.data();
        const auto ys = out.reconstruction.data();
        for (std::size_t b = 0; b < images.size(); ++b) {
            psnrs[begin + b] = psnr(xs.subspan(b * pixels, pixels), ys.subspan(b * pixels, pixels));
        }
    });

    EvalReport r;
    r.mu_db = opt.mu_db;
    r.n = total;
    r.realizations = opt.realizations;
    r.estimator = opt.estimator;
    r.psnr_mean = std::accumulate(psnrs.begin(), psnrs.end(), 0.0) / static_cast<double>(total);
    if (total > 1) {
        double ss = 0.0;
        for (double p : psnrs) ss += (p - r.psnr_mean) * (p - r.psnr_mean);
        r.psnr_stderr = std::sqrt(ss / static_cast<double>(total - 1) / static_cast<double>(total));
    }
    if (!std::isfinite(r.psnr_mean)) throw NumericError("evaluation produced a non-finite PSNR");
    return r;
}

std::vector<EvalReport> sweep_snr(model::CajsccModel& model, const phy::OfdmConfig& ofdm,
                                  const data::ImageSet& test, std::span<const double> mu_list,
                                  const EvalOptions& options) {
    std::vector<EvalReport> out;
    for (double mu : mu_list) {
        EvalOptions opt = options;
        opt.mu_db = mu;
        out.push_back(evaluate(model, ofdm, test, opt));
    }
    return out;
}

void write_sweep_csv(std::span<const EvalReport> reports, const std::string& path) {
    auto out = open_csv(path, "mu_db,psnr_mean,psnr_stderr,n");
    for (const auto& r : reports) {
        out << format_double(r.mu_db) << ',' << format_double(r.psnr_mean) << ',' << format_double(r.psnr_stderr)
            << ',' << r.n << '\n';
    }
    close_csv(out, path);
}

std::vector<EvalReport> read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "mu_db,psnr_mean,psnr_stderr,n") {
        throw FormatError("'" + path + "': missing sweep CSV header");
    }
    std::vector<EvalReport> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        if (cells.size() != 4) throw FormatError("'" + path + "' line " + std::to_string(line_no) + ": expected 4 fields");
        try {
            EvalReport r;
            r.mu_db = std::stod(cells[0]);
            r.psnr_mean = std::stod(cells[1]);
            r.psnr_stderr = std::stod(cells[2]);
            r.n = std::stoull(cells[3]);
            out.push_back(r);
        } catch (const std::logic_error&) {
            throw FormatError("'" + path + "' line " + std::to_string(line_no) + ": malformed number");
        }
    }
    return out;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("spearman: inputs differ in length");
    const std::size_t n = a.size();
    auto ranks = [n](std::span<const double> v) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(n);
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

PowerReport power_allocation_report(model::CajsccModel& model, const phy::OfdmConfig& ofdm,
                                    const data::ImageSet& test, const EvalOptions& opt) {
    if (test.empty()) throw ConfigError("power report: test set is empty");
    const std::size_t l_f = ofdm.l_f;
    const std::size_t n_s = ofdm.n_s;
    std::vector<double> gain(l_f, 0.0), power(l_f, 0.0);
    for (std::size_t begin = 0; begin < test.count(); begin += opt.batch_size) {
        const std::size_t end = std::min(test.count(), begin + opt.batch_size);
        std::vector<std::size_t> images;
        std::vector<csi::CsiVector> sorted;
        for (std::size_t i = begin; i < end; ++i) {
            images.push_back(i);
            const LinkDraw d = eval_draw(ofdm, opt, i);
            sorted.push_back(csi::permute(d.csi, d.perm));
            for (std::size_t k = 0; k < l_f; ++k) gain[k] += sorted.back().gains[k];
        }
        const nn::Tensor y = model.encode_batch(test.batch(images), model::csi_features(sorted), nn::Mode::Eval);
        const auto v = y.data();
        const std::size_t plane = n_s * l_f;
        for (std::size_t b = 0; b < images.size(); ++b) {
            const double* re = v.data() + b * 2 * plane;
            const double* im = re + plane;
            for (std::size_t s = 0; s < n_s; ++s) {
                for (std::size_t k = 0; k < l_f; ++k) {
                    const std::size_t i = s * l_f + k;
                    power[k] += re[i] * re[i] + im[i] * im[i];
                }
            }
        }
    }
    PowerReport report;
    const double count = static_cast<double>(test.count());
    for (std::size_t k = 0; k < l_f; ++k) {
        gain[k] /= count;
        power[k] /= count * static_cast<double>(n_s);
        report.rows.push_back({k, gain[k], power[k]});
    }
    report.spearman = spearman(gain, power);
    return report;
}

void write_power_csv(const PowerReport& report, const std::string& path) {
    auto out = open_csv(path, "subcarrier_idx,mean_gain,mean_power");
    for (const auto& r : report.rows) {
        out << r.subcarrier << ',' << format_double(r.mean_gain) << ',' << format_double(r.mean_power) << '\n';
    }
    close_csv(out, path);
}

std::vector<MismatchEntry> csi_mismatch_eval(model::CajsccModel& trained_perfect, model::CajsccModel& trained_mmse,
                                             const phy::OfdmConfig& ofdm, const data::ImageSet& test,
                                             std::span<const double> mu_list, const EvalOptions& options) {
    if (trained_perfect.config().arch_hash() != trained_mmse.config().arch_hash()) {
        throw ConfigError("csi-matrix: the two checkpoints have different architectures");
    }
    using csi::EstimatorKind;
    const std::pair<EstimatorKind, model::CajsccModel*> rows[] = {{EstimatorKind::Perfect, &trained_perfect},
                                                                   {EstimatorKind::Mmse, &trained_mmse}};
    const EstimatorKind cols[] = {EstimatorKind::Perfect, EstimatorKind::Mmse, EstimatorKind::Ls};
    std::vector<MismatchEntry> out;
    for (double mu : mu_list) {
        for (const auto& [train_kind, model] : rows) {
            for (EstimatorKind test_kind : cols) {
                EvalOptions opt = options;
                opt.mu_db = mu;
                opt.estimator = test_kind;
                out.push_back({train_kind, test_kind, evaluate(*model, ofdm, test, opt)});
            }
        }
    }
    return out;
}

void write_mismatch_csv(std::span<const MismatchEntry> entries, const std::string& path) {
    auto out = open_csv(path, "train_csi,test_csi,mu_db,psnr_mean,psnr_stderr");
    for (const auto& e : entries) {
        out << csi::to_string(e.train_csi) << ',' << csi::to_string(e.test_csi) << ',' << format_double(e.report.mu_db)
            << ',' << format_double(e.report.psnr_mean) << ',' << format_double(e.report.psnr_stderr) << '\n';
    }
    close_csv(out, path);
}

std::vector<EstimatorBenchRow> estimator_bench(const phy::OfdmConfig& ofdm, std::span<const double> mu_list,
                                               std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw ConfigError("bench.trials must be at least 1");
    const phy::ComplexGrid pilots = phy::pilot_block(ofdm.n_p, ofdm.l_f);
    std::vector<EstimatorBenchRow> rows;
    for (std::size_t m = 0; m < mu_list.size(); ++m) {
        const double mu = mu_list[m];
        const double sigma2 = phy::snr_to_sigma2(mu, ofdm.p_s);
        double ls = 0.0, mmse = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            Rng channel_rng(seed, "bench-channel", m * trials + t);
            Rng noise_rng(seed, "bench-noise", m * trials + t);
            const auto chan = phy::sample_channel_freq(ofdm.l_f, channel_rng);
            const auto noise = phy::sample_awgn(ofdm.n_p, ofdm.l_f, sigma2, noise_rng);
            const auto rx = phy::apply_channel_freq(pilots, chan, noise);
            const auto h_ls = csi::ls_estimate(rx, pilots);
            const auto h_mmse = csi::mmse_estimate(rx, pilots, sigma2);
            for (std::size_t k = 0; k < ofdm.l_f; ++k) {
                ls += std::norm(h_ls[k] - chan.freq_response[k]);
                mmse += std::norm(h_mmse[k] - chan.freq_response[k]);
            }
        }
        const std::size_t n = trials * ofdm.l_f;
        rows.push_back({mu, ls / static_cast<double>(n), mmse / static_cast<double>(n), n});
    }
    return rows;
}

void write_bench_csv(std::span<const EstimatorBenchRow> rows, const std::string& path) {
    auto out = open_csv(path, "mu_db,mse_ls,mse_mmse,n");
    for (const auto& r : rows) {
        out << format_double(r.mu_db) << ',' << format_double(r.mse_ls) << ',' << format_double(r.mse_mmse) << ','
            << r.n << '\n';
    }
    close_csv(out, path);
}

}  // namespace cajscc::train
