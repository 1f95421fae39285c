#include "cajscc/cajscc.h"

#include <memory>
#include <sstream>
#include <string>

#include "app/commands.hpp"
#include "app/run_config.hpp"
#include "common/error.hpp"
#include "model/cajscc_model.hpp"
#include "tensor/checkpoint.hpp"

struct cajscc_config {
    cajscc::app::RunConfig value;
};

struct cajscc_model {
    std::unique_ptr<cajscc::model::CajsccModel> value;
};

namespace {

thread_local std::string g_last_error;

struct ArgumentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

cajscc_status status_of(cajscc::ErrorKind kind) {
    switch (kind) {
        case cajscc::ErrorKind::Dimension: return CAJSCC_ERR_DIMENSION;
        case cajscc::ErrorKind::Config: return CAJSCC_ERR_CONFIG;
        case cajscc::ErrorKind::Format: return CAJSCC_ERR_FORMAT;
        case cajscc::ErrorKind::Io: return CAJSCC_ERR_IO;
        case cajscc::ErrorKind::Numeric: return CAJSCC_ERR_NUMERIC;
        case cajscc::ErrorKind::Training: return CAJSCC_ERR_TRAINING;
        case cajscc::ErrorKind::Estimation: return CAJSCC_ERR_ESTIMATION;
    }
    return CAJSCC_ERR_INTERNAL;
}

template <typename Fn>
cajscc_status guarded(Fn&& fn) {
    g_last_error.clear();
    try {
        fn();
        return CAJSCC_OK;
    } catch (const cajscc::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const ArgumentError& e) {
        g_last_error = e.what();
        return CAJSCC_ERR_ARGUMENT;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CAJSCC_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return CAJSCC_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) throw ArgumentError(std::string(what) + " is null");
}

void require_len(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw ArgumentError(std::string(what) + " has length " + std::to_string(got) + ", expected " +
                            std::to_string(want));
    }
}

cajscc::csi::CsiVector csi_from(const cajscc::model::ModelConfig& cfg, const double* gains, std::size_t gain_len,
                                double mu_db, cajscc::csi::SubcarrierPermutation& perm) {
    require(gains, "gains");
    require_len(gain_len, cfg.l_f, "gains");
    std::vector<cajscc::phy::cplx> h(gains, gains + gain_len);
    perm = cajscc::csi::sort_subcarriers(h);
    return cajscc::csi::build_csi_vector(h, mu_db);
}

}  // namespace

extern "C" {

const char* cajscc_last_error(void) { return g_last_error.c_str(); }

const char* cajscc_status_string(cajscc_status status) {
    switch (status) {
        case CAJSCC_OK: return "ok";
        case CAJSCC_ERR_DIMENSION: return "dimension error";
        case CAJSCC_ERR_CONFIG: return "configuration error";
        case CAJSCC_ERR_FORMAT: return "format error";
        case CAJSCC_ERR_IO: return "i/o error";
        case CAJSCC_ERR_NUMERIC: return "numeric error";
        case CAJSCC_ERR_TRAINING: return "training error";
        case CAJSCC_ERR_ESTIMATION: return "estimation error";
        case CAJSCC_ERR_ARGUMENT: return "invalid argument";
        case CAJSCC_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

cajscc_status cajscc_config_new(cajscc_config** out) {
    return guarded([&] {
        require(out, "out");
        *out = new cajscc_config{};
    });
}

void cajscc_config_free(cajscc_config* config) { delete config; }

cajscc_status cajscc_config_load(cajscc_config* config, const char* path) {
    return guarded([&] {
        require(config, "config");
        require(path, "path");
        config->value.load_file(path);
    });
}

cajscc_status cajscc_config_set(cajscc_config* config, const char* key, const char* value) {
    return guarded([&] {
        require(config, "config");
        require(key, "key");
        require(value, "value");
        config->value.set(key, value);
    });
}

cajscc_status cajscc_config_assign(cajscc_config* config, const char* assignment) {
    return guarded([&] {
        require(config, "config");
        require(assignment, "assignment");
        config->value.set_assignment(assignment);
    });
}

cajscc_status cajscc_config_get(const cajscc_config* config, const char* key, char* buf, size_t capacity,
                                size_t* needed) {
    return guarded([&] {
        require(config, "config");
        require(key, "key");
        const std::string& v = config->value.get(key);
        if (needed != nullptr) *needed = v.size() + 1;
        if (buf == nullptr && capacity == 0) return;
        require(buf, "buf");
        if (capacity < v.size() + 1) throw ArgumentError("buffer too small for value of " + std::string(key));
        v.copy(buf, v.size());
        buf[v.size()] = '\0';
    });
}

cajscc_status cajscc_config_validate(const cajscc_config* config) {
    return guarded([&] {
        require(config, "config");
        config->value.validate();
    });
}

cajscc_status cajscc_config_write(const cajscc_config* config, const char* path) {
    return guarded([&] {
        require(config, "config");
        require(path, "path");
        config->value.write_resolved(path);
    });
}

size_t cajscc_config_key_count(void) { return cajscc::app::RunConfig::keys().size(); }

const char* cajscc_config_key(size_t index) {
    const auto& keys = cajscc::app::RunConfig::keys();
    return index < keys.size() ? keys[index].c_str() : nullptr;
}

size_t cajscc_command_count(void) { return cajscc::app::command_names().size(); }

const char* cajscc_command_name(size_t index) {
    const auto& names = cajscc::app::command_names();
    return index < names.size() ? names[index].c_str() : nullptr;
}

int cajscc_run(const cajscc_config* config, const char* command, const char* out_dir, cajscc_log_fn log, void* user) {
    g_last_error.clear();
    if (config == nullptr || command == nullptr || out_dir == nullptr) {
        g_last_error = "cajscc_run: null argument";
        return CAJSCC_EXIT_VALIDATION;
    }
    std::ostringstream messages;
    int code = CAJSCC_EXIT_RUNTIME;
    try {
        code = cajscc::app::run_command(command, config->value, out_dir, messages);
    } catch (const std::exception& e) {
        messages << "error: " << e.what() << "\n";
    }
    if (code != CAJSCC_EXIT_OK) g_last_error = messages.str();
    if (log != nullptr) {
        std::istringstream lines(messages.str());
        for (std::string line; std::getline(lines, line);) log(line.c_str(), user);
    }
    return code;
}

cajscc_status cajscc_model_create(const cajscc_config* config, cajscc_model** out) {
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        config->value.validate();
        auto m = std::make_unique<cajscc::model::CajsccModel>(config->value.model(),
                                                              cajscc::derive_seed(config->value.seed(), "init"));
        *out = new cajscc_model{std::move(m)};
    });
}

void cajscc_model_free(cajscc_model* model) { delete model; }

cajscc_status cajscc_model_load(cajscc_model* model, const char* path) {
    return guarded([&] {
        require(model, "model");
        require(path, "path");
        cajscc::nn::load_checkpoint(path, model->value->params(), model->value->config().arch_hash());
    });
}

cajscc_status cajscc_model_save(const cajscc_model* model, const char* path) {
    return guarded([&] {
        require(model, "model");
        require(path, "path");
        cajscc::nn::save_checkpoint(path, model->value->params(), model->value->config().arch_hash());
    });
}

cajscc_status cajscc_model_param_count(const cajscc_model* model, size_t* out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        *out = model->value->parameter_count();
    });
}

cajscc_status cajscc_model_sizes(const cajscc_model* model, size_t* image_len, size_t* grid_len, size_t* gain_len) {
    return guarded([&] {
        require(model, "model");
        const auto& c = model->value->config();
        if (image_len) *image_len = c.channels * c.height * c.width;
        if (grid_len) *grid_len = 2 * c.n_s * c.l_f;
        if (gain_len) *gain_len = c.l_f;
    });
}

cajscc_status cajscc_model_encode(cajscc_model* model, const double* image, size_t image_len, const double* gains,
                                  size_t gain_len, double mu_db, double* grid_out, size_t grid_len) {
    return guarded([&] {
        require(model, "model");
        require(image, "image");
        require(grid_out, "grid_out");
        const auto& c = model->value->config();
        require_len(image_len, c.channels * c.height * c.width, "image");
        require_len(grid_len, 2 * c.n_s * c.l_f, "grid_out");
        cajscc::csi::SubcarrierPermutation perm;
        const auto csi = csi_from(c, gains, gain_len, mu_db, perm);
        const cajscc::nn::Tensor x({c.channels, c.height, c.width}, std::vector<double>(image, image + image_len));
        const auto grid = model->value->encode(x, csi, perm);
        std::size_t i = 0;
        for (const auto& v : grid.values()) {
            grid_out[i++] = v.real();
            grid_out[i++] = v.imag();
        }
    });
}

cajscc_status cajscc_model_decode(cajscc_model* model, const double* grid, size_t grid_len, const double* gains,
                                  size_t gain_len, double mu_db, double* image_out, size_t image_len) {
    return guarded([&] {
        require(model, "model");
        require(grid, "grid");
        require(image_out, "image_out");
        const auto& c = model->value->config();
        require_len(grid_len, 2 * c.n_s * c.l_f, "grid");
        require_len(image_len, c.channels * c.height * c.width, "image_out");
        cajscc::csi::SubcarrierPermutation perm;
        const auto csi = csi_from(c, gains, gain_len, mu_db, perm);
        std::vector<cajscc::phy::cplx> values(c.n_s * c.l_f);
        for (std::size_t k = 0; k < values.size(); ++k) values[k] = {grid[2 * k], grid[2 * k + 1]};
        const auto img = model->value->decode(cajscc::phy::ComplexGrid(c.n_s, c.l_f, std::move(values)), csi, perm);
        std::copy(img.data().begin(), img.data().end(), image_out);
    });
}

cajscc_status cajscc_zadoff_chu(size_t root, size_t n, double* out, size_t out_len) {
    return guarded([&] {
        require(out, "out");
        require_len(out_len, 2 * n, "out");
        const auto seq = cajscc::phy::zadoff_chu(root, n);
        for (std::size_t k = 0; k < n; ++k) {
            out[2 * k] = seq[k].real();
            out[2 * k + 1] = seq[k].imag();
        }
    });
}

cajscc_status cajscc_snr_to_sigma2(double mu_db, double p_s, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = cajscc::phy::snr_to_sigma2(mu_db, p_s);
    });
}

}  // extern "C"
