#ifndef MIMODET_H
#define MIMODET_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MIMODET_API __declspec(dllexport)
#else
#define MIMODET_API __attribute__((visibility("default")))
#endif

typedef enum mimodet_status {
    MIMODET_OK = 0,
    MIMODET_ERR_CONFIG = 1,
    MIMODET_ERR_DOMAIN = 2,
    MIMODET_ERR_NUMERICAL = 3,
    MIMODET_ERR_REFUSED = 4,
    MIMODET_ERR_INTEGRITY = 5,
    MIMODET_ERR_IO = 6,
    MIMODET_ERR_ARGUMENT = 7,
    MIMODET_ERR_BUFFER = 8,
    MIMODET_ERR_INTERNAL = 9
} mimodet_status;

typedef struct mimodet_detector mimodet_detector;

typedef void (*mimodet_line_fn)(const char* line, void* user);

MIMODET_API const char* mimodet_version(void);

/* Message of the last failure on the calling thread; empty after success. */
MIMODET_API const char* mimodet_last_error(void);

MIMODET_API const char* mimodet_status_name(mimodet_status status);

/* Runs the experiment described by a JSON config file. Each result line is
   passed to `on_line` when it is non-null. `output_root` may be null. */
MIMODET_API mimodet_status mimodet_run_config(const char* config_path, int force, const char* output_root,
                                              mimodet_line_fn on_line, void* user);

/* Writes the checkpoint summary into buf. `needed` receives the length
   including the terminator; MIMODET_ERR_BUFFER when it exceeds cap. */
MIMODET_API mimodet_status mimodet_describe_checkpoint(const char* path, char* buf, size_t cap, size_t* needed);

/* Detector from a JSON spec:
     {"name": "sd", "constellation": "bpsk", "K": 4, "N": 8, "complex": false,
      "M": 5, "checkpoint": "...", "layer": 0}
   Only name, constellation, K and N are required. */
MIMODET_API mimodet_status mimodet_detector_create(const char* spec_json, mimodet_detector** out);

MIMODET_API void mimodet_detector_destroy(mimodet_detector* det);

/* Real-model dimensions: rows of H (dim y) and columns (dim x). */
MIMODET_API mimodet_status mimodet_detector_dims(const mimodet_detector* det, size_t* rows, size_t* cols);

/* Detects `count` instances. H is count blocks of rows*cols doubles in
   row-major order, y is count*rows doubles, sigma2 holds count noise
   variances (may be null for detectors that ignore it). x_out receives
   count*cols symbols; failed instances are written as NaN. */
MIMODET_API mimodet_status mimodet_detector_detect(const mimodet_detector* det, size_t count, const double* H,
                                                   const double* y, const double* sigma2, double* x_out);

#ifdef __cplusplus
}
#endif

#endif
