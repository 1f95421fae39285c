#ifndef CAJSCC_H
#define CAJSCC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define CAJSCC_API __attribute__((visibility("default")))
#else
#define CAJSCC_API
#endif

typedef enum cajscc_status {
    CAJSCC_OK = 0,
    CAJSCC_ERR_DIMENSION = 1,
    CAJSCC_ERR_CONFIG = 2,
    CAJSCC_ERR_FORMAT = 3,
    CAJSCC_ERR_IO = 4,
    CAJSCC_ERR_NUMERIC = 5,
    CAJSCC_ERR_TRAINING = 6,
    CAJSCC_ERR_ESTIMATION = 7,
    CAJSCC_ERR_ARGUMENT = 8, /* null handle or pointer, too-small buffer */
    CAJSCC_ERR_INTERNAL = 9
} cajscc_status;

/* Exit codes returned by cajscc_run. */
enum { CAJSCC_EXIT_OK = 0, CAJSCC_EXIT_VALIDATION = 1, CAJSCC_EXIT_RUNTIME = 2 };

/* Message of the last failed call on this thread, "" if none. */
CAJSCC_API const char* cajscc_last_error(void);
CAJSCC_API const char* cajscc_status_string(cajscc_status status);

/* Run configuration: dotted key=value settings with defaults. */
typedef struct cajscc_config cajscc_config;

CAJSCC_API cajscc_status cajscc_config_new(cajscc_config** out);
CAJSCC_API void cajscc_config_free(cajscc_config* config);
CAJSCC_API cajscc_status cajscc_config_load(cajscc_config* config, const char* path);
CAJSCC_API cajscc_status cajscc_config_set(cajscc_config* config, const char* key, const char* value);
/* Accepts "key=value". */
CAJSCC_API cajscc_status cajscc_config_assign(cajscc_config* config, const char* assignment);
/* Copies the value with its terminator into buf. *needed (if non-null)
   receives the required capacity including the terminator. */
CAJSCC_API cajscc_status cajscc_config_get(const cajscc_config* config, const char* key, char* buf, size_t capacity,
                                           size_t* needed);
CAJSCC_API cajscc_status cajscc_config_validate(const cajscc_config* config);
CAJSCC_API cajscc_status cajscc_config_write(const cajscc_config* config, const char* path);

CAJSCC_API size_t cajscc_config_key_count(void);
CAJSCC_API const char* cajscc_config_key(size_t index);
CAJSCC_API size_t cajscc_command_count(void);
CAJSCC_API const char* cajscc_command_name(size_t index);

/* Receives each progress or error message of a run. */
typedef void (*cajscc_log_fn)(const char* message, void* user);

/* Runs train, eval, sweep, report-power, csi-matrix, gradcheck or
   estimator-bench. Returns a CAJSCC_EXIT_* code. */
CAJSCC_API int cajscc_run(const cajscc_config* config, const char* command, const char* out_dir, cajscc_log_fn log,
                          void* user);

/* Autoencoder built from the model and ofdm sections of a configuration. */
typedef struct cajscc_model cajscc_model;

CAJSCC_API cajscc_status cajscc_model_create(const cajscc_config* config, cajscc_model** out);
CAJSCC_API void cajscc_model_free(cajscc_model* model);
CAJSCC_API cajscc_status cajscc_model_load(cajscc_model* model, const char* path);
CAJSCC_API cajscc_status cajscc_model_save(const cajscc_model* model, const char* path);
CAJSCC_API cajscc_status cajscc_model_param_count(const cajscc_model* model, size_t* out);
/* Image length c*h*w, grid length 2*N_s*L_f, gain length L_f. */
CAJSCC_API cajscc_status cajscc_model_sizes(const cajscc_model* model, size_t* image_len, size_t* grid_len,
                                            size_t* gain_len);

/* image: c*h*w values in [0,1], channel-major. gains: estimated |h_k| per
   physical subcarrier. grid_out: N_s x L_f symbols on physical subcarriers,
   row-major, real and imaginary parts interleaved. */
CAJSCC_API cajscc_status cajscc_model_encode(cajscc_model* model, const double* image, size_t image_len,
                                             const double* gains, size_t gain_len, double mu_db, double* grid_out,
                                             size_t grid_len);
/* Inverse direction: equalized physical grid (same layout) to an image. */
CAJSCC_API cajscc_status cajscc_model_decode(cajscc_model* model, const double* grid, size_t grid_len,
                                             const double* gains, size_t gain_len, double mu_db, double* image_out,
                                             size_t image_len);

/* Zadoff-Chu sequence of length n, interleaved real/imaginary into out[2n]. */
CAJSCC_API cajscc_status cajscc_zadoff_chu(size_t root, size_t n, double* out, size_t out_len);
CAJSCC_API cajscc_status cajscc_snr_to_sigma2(double mu_db, double p_s, double* out);

#ifdef __cplusplus
}
#endif

#endif
