// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "app/gradcheck_suite.hpp"
#include "csi/estimation.hpp"
#include "data/dataset.hpp"
#include "model/cajscc_model.hpp"
#include "phy/ofdm.hpp"
#include "test_util.hpp"
#include "train/evaluation.hpp"
#include "train/trainer.hpp"

using namespace cajscc;
using phy::ComplexGrid;
using phy::cplx;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

ComplexGrid random_grid(std::size_t rows, std::size_t cols, Rng& rng) {
    ComplexGrid g(rows, cols);
    for (auto& v : g.values()) v = rng.complex_normal(1.0);
    return g;
}

double grid_diff(const ComplexGrid& a, const ComplexGrid& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

model::ModelConfig toy_model(model::Variant v = model::Variant::Dual) { return testing::tiny_model(16, v); }

struct ToySetup {
    data::ImageSet train, val, test;
    phy::OfdmConfig ofdm = testing::tiny_ofdm();
};

const ToySetup& toy() {
    static const ToySetup s = [] {
        ToySetup t;
        const auto all = data::synthetic_set(500, {1, 8, 8}, derive_seed(1, "data"));
        auto parts = data::split(all, 0.2, derive_seed(1, "split"));
        t.train = parts.first;
        t.val = parts.second;
        t.test = data::synthetic_set(100, {1, 8, 8}, derive_seed(1, "test-data"));
        return t;
    }();
    return s;
}

train::TrainConfig toy_train(csi::EstimatorKind est, std::size_t epochs = 200) {
    train::TrainConfig tc;
    tc.snr = train::SnrSchedule::uniform(0.0, 20.0);
    tc.batch_size = 16;
    tc.max_epochs = epochs;
    tc.patience = 10;
    tc.estimator = est;
    tc.seed = 1;
    return tc;
}

// Models trained once and shared between criteria 7, 8 and 10.
struct Trained {
    std::unique_ptr<model::CajsccModel> model;
    train::FitResult fit;
};

Trained& trained(csi::EstimatorKind est) {
    static std::map<csi::EstimatorKind, Trained> cache;
    auto it = cache.find(est);
    if (it == cache.end()) {
        Trained t;
        t.model = std::make_unique<model::CajsccModel>(toy_model(), derive_seed(1, "init"));
        train::Trainer trainer(*t.model, toy().ofdm, toy_train(est));
        t.fit = trainer.fit(toy().train, toy().val);
        it = cache.emplace(est, std::move(t)).first;
    }
    return it->second;
}

Outcome criterion1() {
    Rng rng(101);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t l_t = 1 + rng.index(16);
        const std::size_t cp = l_t - 1 + rng.index(4);
        const auto chan = phy::sample_channel_taps(l_t, 64, rng);
        const auto x = random_grid(8, 64, rng);
        const auto f = phy::apply_channel_freq(x, chan, phy::NoiseSpec::noiseless(), rng);
        const auto tt = phy::apply_channel_time(x, chan, cp, phy::NoiseSpec::noiseless(), rng);
        worst = std::max(worst, grid_diff(f, tt));
    }
    return {worst < 1e-9, fmt("max |time - freq| = %.3g over 100 pairs", worst)};
}

Outcome criterion2() {
    const std::size_t n = 64;
    const auto z = phy::zadoff_chu(1, n);
    double modulus = 0.0, off_peak = 0.0;
    for (const auto& v : z) modulus = std::max(modulus, std::abs(std::abs(v) - 1.0));
    for (std::size_t lag = 1; lag < n; ++lag) {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += z[k] * std::conj(z[(k + lag) % n]);
        off_peak = std::max(off_peak, std::abs(acc));
    }
    return {modulus < 1e-12 && off_peak < 1e-9 * n,
            fmt("max ||z|-1| = %.3g, max off-peak autocorrelation = %.3g", modulus, off_peak)};
}

Outcome criterion3() {
    Rng rng(103);
    const auto pilots = phy::pilot_block(2, 64);
    double noiseless = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto chan = phy::sample_channel_freq(64, rng);
        const auto rx = phy::apply_channel_freq(pilots, chan, phy::NoiseSpec::noiseless(), rng);
        const auto h = csi::ls_estimate(rx, pilots);
        for (std::size_t k = 0; k < 64; ++k) noiseless = std::max(noiseless, std::abs(h[k] - chan.freq_response[k]));
    }
    bool pass = noiseless < 1e-12;
    std::string detail = fmt("noiseless LS error %.3g;", noiseless);
    phy::OfdmConfig ofdm;
    ofdm.n_p = 2;
    const std::vector<double> mus{0.0, 5.0, 10.0};
    for (const auto& r : train::estimator_bench(ofdm, mus, 10000, 103)) {
        const double theory = phy::snr_to_sigma2(r.mu_db) / 2.0;
        const double ratio = r.mse_mmse / r.mse_ls;
        const bool ok = ratio < 0.95 && std::abs(r.mse_ls / theory - 1.0) <= 0.10;
        pass = pass && ok;
        detail += fmt(" mu=%g: MMSE/LS=%.4f, LS/theory=%.4f", r.mu_db, ratio, r.mse_ls / theory);
        detail += ok ? "" : " (fails)";
        detail += ";";
    }
    return {pass, detail};
}

Outcome criterion4() {
    Rng rng(104);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto chan = phy::sample_channel_freq(64, rng);
        const auto x = random_grid(8, 64, rng);
        const auto y = phy::apply_channel_freq(x, chan, phy::NoiseSpec::noiseless(), rng);
        worst = std::max(worst, grid_diff(csi::mmse_equalize(y, chan.freq_response, 0.0), x));
    }
    return {worst < 1e-9, fmt("max |equalized - sent| = %.3g", worst)};
}

Outcome criterion5() {
    model::CajsccModel m(toy_model(), 105);
    Rng rng(105);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<cplx> h(16);
        for (auto& v : h) v = rng.complex_normal(1.0);
        nn::Tensor x({1, 8, 8});
        for (auto& v : x.data()) v = rng.uniform();
        const auto perm = csi::sort_subcarriers(h);
        const auto g = m.encode(x, csi::build_csi_vector(h, rng.uniform(0.0, 20.0)), perm);
        worst = std::max(worst, std::abs(g.mean_power() - 1.0));
    }
    return {worst < 1e-9, fmt("max |mean power - 1| = %.3g over 1000 encodes", worst)};
}

Outcome criterion6() {
    double worst = 0.0;
    std::string worst_name;
    std::size_t checks = 0, skipped = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        for (const auto& r : app::run_gradcheck_suite(seed)) {
            checks += r.checked;
            skipped += r.skipped;
            if (r.max_rel_error > worst) {
                worst = r.max_rel_error;
                worst_name = r.name;
            }
        }
    }
    return {worst < 1e-4, fmt("%g coordinates over 100 random trials, worst relative error %.3g", double(checks), worst) +
                              " (" + worst_name + ")" + fmt(", %g on a kink skipped", double(skipped))};
}

Outcome criterion7() {
    const auto& t = trained(csi::EstimatorKind::Mmse);
    train::EvalOptions opt;
    opt.estimator = csi::EstimatorKind::Mmse;
    opt.seed = derive_seed(1, "eval");
    opt.mu_db = 0.0;
    const auto low = train::evaluate(*t.model, toy().ofdm, toy().test, opt);
    opt.mu_db = 20.0;
    const auto high = train::evaluate(*t.model, toy().ofdm, toy().test, opt);
    const double gain = t.fit.best_val_psnr - t.fit.initial_val_psnr;
    const bool pass = t.fit.history.size() <= 200 && gain >= 3.0 && high.psnr_mean >= low.psnr_mean;
    return {pass, fmt("validation PSNR %.2f -> %.2f dB (+%.2f) at epoch %g", t.fit.initial_val_psnr,
                      t.fit.best_val_psnr, gain, double(t.fit.best_epoch)) +
                      fmt("; test PSNR mu=0: %.2f dB, mu=20: %.2f dB", low.psnr_mean, high.psnr_mean)};
}

Outcome criterion8() {
    std::vector<std::pair<model::Variant, std::size_t>> counts;
    bool trains = true;
    std::unique_ptr<model::CajsccModel> none;
    for (auto v : {model::Variant::ChannelOnly, model::Variant::None}) {
        auto m = std::make_unique<model::CajsccModel>(toy_model(v), derive_seed(1, "init"));
        train::Trainer trainer(*m, toy().ofdm, toy_train(csi::EstimatorKind::Mmse, 10));
        const auto fit = trainer.fit(toy().train, toy().val);
        trains = trains && fit.best_val_psnr > fit.initial_val_psnr;
        counts.emplace_back(v, m->parameter_count());
        if (v == model::Variant::None) none = std::move(m);
    }
    auto& dual = *trained(csi::EstimatorKind::Mmse).model;
    const std::size_t n_dual = dual.parameter_count(), n_ch = counts[0].second;

    Rng rng(108);
    double none_diff = 0.0, dual_diff = 0.0;
    const auto id = csi::SubcarrierPermutation::identity(16);
    for (int t = 0; t < 20; ++t) {
        nn::Tensor x = toy().test.image_tensor(static_cast<std::size_t>(t));
        std::vector<cplx> h1(16), h2(16);
        for (auto& v : h1) v = rng.complex_normal(1.0);
        for (auto& v : h2) v = rng.complex_normal(1.0);
        const auto c1 = csi::build_csi_vector(h1, 3.0), c2 = csi::build_csi_vector(h2, 17.0);
        none_diff = std::max(none_diff, grid_diff(none->encode(x, c1, id), none->encode(x, c2, id)));
        dual_diff = std::max(dual_diff, grid_diff(dual.encode(x, c1, id), dual.encode(x, c2, id)));
    }
    const bool pass = trains && n_ch < n_dual && none_diff == 0.0 && dual_diff > 1e-6;
    return {pass, fmt("params dual %g, channel-only %g, none %g", double(n_dual), double(n_ch),
                      double(counts[1].second)) +
                      fmt("; encoding change under different CSI: none %.3g, dual %.3g", none_diff, dual_diff) +
                      (trains ? "" : "; a variant failed to improve")};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CAJSCC_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome criterion9() {
    const fs::path root = fs::temp_directory_path() / "cajscc_acceptance_determinism";
    fs::remove_all(root);
    const std::string common = std::string("--config ") + CAJSCC_TOY_CONFIG +
                               " --seed 9 --set train.epochs=3 --set data.count=120 --set data.test_count=20"
                               " --set eval.realizations=2 --set bench.trials=500";
    bool pass = true;
    std::size_t compared = 0;
    std::string detail;
    for (int rep = 0; rep < 2; ++rep) {
        const fs::path dir = root / ("run" + std::to_string(rep));
        const std::string ckpt = (dir / "train" / "model.ckpt").string();
        const std::string with_model = common + " --set model.checkpoint=" + ckpt +
                                       " --set csi.checkpoint_perfect=" + ckpt + " --set csi.checkpoint_mmse=" + ckpt;
        const std::vector<std::pair<std::string, std::string>> cmds = {
            {"train", common},          {"eval", with_model},      {"sweep", with_model},
            {"report-power", with_model}, {"csi-matrix", with_model}, {"gradcheck", common},
            {"estimator-bench", common}};
        for (const auto& [cmd, args] : cmds) {
            const int code = run_cli(cmd + " " + args + " --out " + (dir / cmd).string());
            if (code != 0) {
                pass = false;
                detail += cmd + " exited " + std::to_string(code) + "; ";
            }
        }
    }
    for (const auto& entry : fs::recursive_directory_iterator(root / "run0")) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension();
        if (ext != ".csv" && ext != ".ckpt") continue;
        const fs::path twin = root / "run1" / fs::relative(entry.path(), root / "run0");
        ++compared;
        if (!fs::exists(twin) || read_file(entry.path()) != read_file(twin)) {
            pass = false;
            detail += fs::relative(entry.path(), root / "run0").string() + " differs; ";
        }
    }
    fs::remove_all(root);
    pass = pass && compared >= 8;
    return {pass, detail + fmt("%g CSV/checkpoint files compared across two runs of 7 commands", double(compared))};
}

Outcome criterion10() {
    auto& perfect = *trained(csi::EstimatorKind::Perfect).model;
    auto& mmse = *trained(csi::EstimatorKind::Mmse).model;
    train::EvalOptions opt;
    opt.seed = derive_seed(1, "eval");
    const std::vector<double> mus{10.0};
    const auto entries = train::csi_mismatch_eval(perfect, mmse, toy().ofdm, toy().test, mus, opt);
    const train::EvalReport* pp = nullptr;
    const train::EvalReport* pl = nullptr;
    bool finite = true;
    std::string table;
    for (const auto& e : entries) {
        finite = finite && std::isfinite(e.report.psnr_mean);
        if (e.train_csi == csi::EstimatorKind::Perfect && e.test_csi == csi::EstimatorKind::Perfect) pp = &e.report;
        if (e.train_csi == csi::EstimatorKind::Perfect && e.test_csi == csi::EstimatorKind::Ls) pl = &e.report;
        table += " " + csi::to_string(e.train_csi) + "/" + csi::to_string(e.test_csi) + "=" +
                 fmt("%.2f", e.report.psnr_mean);
    }
    const double tol = std::max(pp->psnr_stderr, pl->psnr_stderr);
    const bool pass = entries.size() == 6 && finite && pp->psnr_mean >= pl->psnr_mean - tol;
    return {pass, "mu=10 dB:" + table + fmt(" (one standard error %.3f)", tol)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;  // 0: no runtime bound
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "channel equivalence", 5.0, criterion1},
        {2, "Zadoff-Chu pilots", 1.0, criterion2},
        {3, "estimator oracles", 10.0, criterion3},
        {4, "equalizer identity", 0.0, criterion4},
        {5, "power constraint", 0.0, criterion5},
        {6, "gradient suite", 60.0, criterion6},
        {7, "toy training", 600.0, criterion7},
        {8, "ablation mechanics", 0.0, criterion8},
        {9, "determinism", 0.0, criterion9},
        {10, "CSI mismatch harness", 0.0, criterion10},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_s > 0.0 && secs > c.limit_s) {
            o.pass = false;
            o.detail += fmt("; runtime %.1f s exceeds %.0f s", secs, c.limit_s);
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %2d %-22s %s  [%.1f s] %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
