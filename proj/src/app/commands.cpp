#include "app/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "app/gradcheck_suite.hpp"
#include "common/error.hpp"
#include "data/dataset.hpp"
#include "model/cajscc_model.hpp"
#include "tensor/checkpoint.hpp"
#include "train/evaluation.hpp"
#include "train/trainer.hpp"

namespace cajscc::app {

namespace {

namespace fs = std::filesystem;

struct Context {
    const RunConfig& cfg;
    fs::path out;
    std::ostream& log;
};

data::ImageShape model_shape(const RunConfig& cfg) {
    return {cfg.get_size("model.c"), cfg.get_size("model.h"), cfg.get_size("model.w")};
}

data::ImageSet load_images(const RunConfig& cfg, const std::vector<std::string>& paths, std::size_t count,
                           const char* label) {
    const std::string& source = cfg.get("data.source");
    const data::ImageShape shape = model_shape(cfg);
    const std::size_t crop = cfg.get_size("data.crop");
    data::ImageSet set;
    if (source == "synthetic" && paths.empty()) {
        data::ImageShape gen = shape;
        if (crop > 0) gen.height = gen.width = std::max({crop, shape.height, shape.width});
        set = data::synthetic_set(count, gen, derive_seed(cfg.seed(), label));
    } else if (source == "raw" || (source == "synthetic" && !paths.empty())) {
        if (paths.size() != 1) throw ConfigError("raw image input takes exactly one path");
        set = data::load_raw(paths.front());
    } else {
        set = data::load_cifar10(paths);
    }
    if (crop > 0 && (set.shape().height != crop || set.shape().width != crop)) {
        set = data::random_crop(set, crop, derive_seed(cfg.seed(), std::string(label) + "-crop")).images;
    }
    if (!(set.shape() == shape)) {
        throw ConfigError("images are " + std::to_string(set.shape().channels) + "x" +
                          std::to_string(set.shape().height) + "x" + std::to_string(set.shape().width) +
                          " but the model expects model.c x model.h x model.w = " + std::to_string(shape.channels) +
                          "x" + std::to_string(shape.height) + "x" + std::to_string(shape.width));
    }
    return set;
}

data::ImageSet test_set(const RunConfig& cfg) {
    const auto paths = cfg.get_string_list("data.test_paths");
    if (paths.empty() && cfg.get("data.source") != "synthetic") {
        throw ConfigError("data.test_paths is required when data.source=" + cfg.get("data.source"));
    }
    return load_images(cfg, paths, cfg.get_size("data.test_count"), "test-data");
}

std::unique_ptr<model::CajsccModel> load_model(const RunConfig& cfg, const std::string& key) {
    const std::string& path = cfg.get(key);
    if (path.empty()) throw ConfigError(key + " is required for this command");
    auto model = std::make_unique<model::CajsccModel>(cfg.model(), derive_seed(cfg.seed(), "init"));
    nn::load_checkpoint(path, model->params(), model->config().arch_hash());
    return model;
}

train::EvalOptions eval_options(const RunConfig& cfg) {
    train::EvalOptions opt;
    opt.mu_db = cfg.get_double("eval.mu");
    opt.estimator = cfg.estimator();
    opt.realizations = cfg.get_size("eval.realizations");
    opt.seed = derive_seed(cfg.seed(), "eval");
    opt.threads = cfg.get_size("eval.threads");
    return opt;
}

std::string out_file(const Context& ctx, const char* name) { return (ctx.out / name).string(); }

int cmd_train(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const data::ImageSet all = load_images(cfg, cfg.get_string_list("data.paths"), cfg.get_size("data.count"), "data");
    const auto [train_set, val_set] = data::split(all, cfg.get_double("train.val_fraction"), derive_seed(cfg.seed(), "split"));
    if (train_set.empty() || val_set.empty()) throw ConfigError("train.val_fraction leaves an empty split");

    model::CajsccModel model(cfg.model(), derive_seed(cfg.seed(), "init"));
    train::Trainer trainer(model, cfg.ofdm(), cfg.train());
    const train::FitResult fit = trainer.fit(train_set, val_set);

    nn::save_checkpoint(out_file(ctx, "model.ckpt"), model.params(), model.config().arch_hash());
    std::ofstream csv(out_file(ctx, "metrics.csv"), std::ios::binary);
    csv << "epoch,train_loss,val_psnr\n";
    csv << "0,," << train::format_double(fit.initial_val_psnr) << '\n';
    for (const auto& e : fit.history) {
        csv << e.epoch << ',' << train::format_double(e.train_loss) << ',' << train::format_double(e.val_psnr) << '\n';
    }
    if (!csv) throw IoError("failed writing metrics.csv");
    ctx.log << "parameters " << model.parameter_count() << "\n"
            << "untrained validation PSNR " << fit.initial_val_psnr << " dB\n"
            << "best validation PSNR " << fit.best_val_psnr << " dB at epoch " << fit.best_epoch << " of "
            << fit.history.size() << "\n";
    return kExitOk;
}

int cmd_eval(const Context& ctx) {
    auto model = load_model(ctx.cfg, "model.checkpoint");
    const auto report = train::evaluate(*model, ctx.cfg.ofdm(), test_set(ctx.cfg), eval_options(ctx.cfg));
    train::write_sweep_csv(std::span(&report, 1), out_file(ctx, "eval.csv"));
    ctx.log << "mu " << report.mu_db << " dB: PSNR " << report.psnr_mean << " +- " << report.psnr_stderr << " dB (n="
            << report.n << ")\n";
    return kExitOk;
}

int cmd_sweep(const Context& ctx) {
    auto model = load_model(ctx.cfg, "model.checkpoint");
    const auto mus = ctx.cfg.get_double_list("eval.mu_list");
    const auto reports = train::sweep_snr(*model, ctx.cfg.ofdm(), test_set(ctx.cfg), mus, eval_options(ctx.cfg));
    train::write_sweep_csv(reports, out_file(ctx, "sweep.csv"));
    for (const auto& r : reports) ctx.log << "mu " << r.mu_db << " dB: PSNR " << r.psnr_mean << " dB\n";
    return kExitOk;
}

int cmd_report_power(const Context& ctx) {
    auto model = load_model(ctx.cfg, "model.checkpoint");
    const auto report =
        train::power_allocation_report(*model, ctx.cfg.ofdm(), test_set(ctx.cfg), eval_options(ctx.cfg));
    train::write_power_csv(report, out_file(ctx, "power.csv"));
    ctx.log << "spearman(gain, power) " << report.spearman << "\n";
    return kExitOk;
}

int cmd_csi_matrix(const Context& ctx) {
    auto perfect = load_model(ctx.cfg, "csi.checkpoint_perfect");
    auto mmse = load_model(ctx.cfg, "csi.checkpoint_mmse");
    const auto mus = ctx.cfg.get_double_list("eval.mu_list");
    const auto entries =
        train::csi_mismatch_eval(*perfect, *mmse, ctx.cfg.ofdm(), test_set(ctx.cfg), mus, eval_options(ctx.cfg));
    train::write_mismatch_csv(entries, out_file(ctx, "mismatch.csv"));
    for (const auto& e : entries) {
        ctx.log << "train " << csi::to_string(e.train_csi) << " test " << csi::to_string(e.test_csi) << " mu "
                << e.report.mu_db << ": " << e.report.psnr_mean << " dB\n";
    }
    return kExitOk;
}

int cmd_gradcheck(const Context& ctx) {
    const double tol = ctx.cfg.get_double("gradcheck.tol");
    const auto results = run_gradcheck_suite(ctx.cfg.seed(), ctx.cfg.get_double("gradcheck.eps"));
    std::ofstream csv(out_file(ctx, "gradcheck.csv"), std::ios::binary);
    csv << "check,max_rel_error,checked,skipped\n";
    bool ok = true;
    for (const auto& r : results) {
        csv << r.name << ',' << train::format_double(r.max_rel_error) << ',' << r.checked << ',' << r.skipped << '\n';
        const bool pass = r.max_rel_error < tol;
        ok = ok && pass;
        ctx.log << (pass ? "ok   " : "FAIL ") << r.name << " " << r.max_rel_error << "\n";
    }
    if (!csv) throw IoError("failed writing gradcheck.csv");
    return ok ? kExitOk : kExitRuntime;
}

int cmd_estimator_bench(const Context& ctx) {
    const auto mus = ctx.cfg.get_double_list("bench.mu_list");
    const auto rows = train::estimator_bench(ctx.cfg.ofdm(), mus, ctx.cfg.get_size("bench.trials"),
                                             derive_seed(ctx.cfg.seed(), "bench"));
    train::write_bench_csv(rows, out_file(ctx, "estimator_bench.csv"));
    for (const auto& r : rows) ctx.log << "mu " << r.mu_db << " dB: LS " << r.mse_ls << " MMSE " << r.mse_mmse << "\n";
    return kExitOk;
}

const std::map<std::string, std::function<int(const Context&)>>& table() {
    static const std::map<std::string, std::function<int(const Context&)>> t = {
        {"train", cmd_train},
        {"eval", cmd_eval},
        {"sweep", cmd_sweep},
        {"report-power", cmd_report_power},
        {"csi-matrix", cmd_csi_matrix},
        {"gradcheck", cmd_gradcheck},
        {"estimator-bench", cmd_estimator_bench},
    };
    return t;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"train",      "eval",      "sweep",          "report-power",
                                                   "csi-matrix", "gradcheck", "estimator-bench"};
    return names;
}

int run_command(const std::string& command, const RunConfig& config, const std::string& out_dir,
                std::ostream& log) {
    const auto it = table().find(command);
    if (it == table().end()) {
        log << "error: unknown command '" << command << "'\n";
        return kExitValidation;
    }
    try {
        config.validate();
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    try {
        fs::create_directories(out_dir);
        config.write_resolved((fs::path(out_dir) / "resolved.cfg").string());
        return it->second(Context{config, fs::path(out_dir), log});
    } catch (const ConfigError& e) {
        log << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace cajscc::app
