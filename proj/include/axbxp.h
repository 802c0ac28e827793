/* SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the axbxp shared library: approximate blocked fixed-point
 * arithmetic, the AXBP tensor format, design-space enumeration, a small
 * quantized inference engine with greedy per-layer configuration search,
 * and an analytical cost model.
 *
 * Conventions: every fallible function returns a status code (AXBXP_OK on
 * success); axbxp_last_error() describes the most recent failure on the
 * calling thread. Handles are opaque and freed with their matching _free
 * function. Strings returned through char** are heap-allocated and freed
 * with axbxp_string_free().
 */
#ifndef AXBXP_H
#define AXBXP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* status codes */
#define AXBXP_OK 0
#define AXBXP_ERR_RANGE 1
#define AXBXP_ERR_CONFIG 2
#define AXBXP_ERR_INDEX 3
#define AXBXP_ERR_SHAPE 4
#define AXBXP_ERR_INPUT 5
#define AXBXP_ERR_FORMAT 6
#define AXBXP_ERR_IO 7
#define AXBXP_ERR_TRAIN 8
#define AXBXP_ERR_INTERNAL 9

/* block-selection heuristics */
#define AXBXP_MODE_STATIC 0
#define AXBXP_MODE_DYNAMIC 1

/* cost-model fabrics */
#define AXBXP_FABRIC_FXP8 0
#define AXBXP_FABRIC_AXBXP_PE 1
#define AXBXP_FABRIC_FUSION16 2

const char* axbxp_version(void);
const char* axbxp_status_name(int status);
const char* axbxp_last_error(void);
void axbxp_string_free(char* s);

/* ---- blocked scalars -------------------------------------------------- */

/* sign-magnitude scalar as n blocks of k bits, blocks[0] least significant */
typedef struct {
    uint8_t blocks[4];
    uint8_t k, n;
    int8_t sign; /* +1 or -1 */
} axbxp_scalar;

int axbxp_to_blocks(int value, int k, axbxp_scalar* out);
int axbxp_from_blocks(const axbxp_scalar* s, int* out);
int axbxp_exact_mul(const axbxp_scalar* x, const axbxp_scalar* y, int32_t* out);
/* selection masks: bit i selects block i */
int axbxp_approx_mul(const axbxp_scalar* x, uint8_t sel_x, const axbxp_scalar* y, uint8_t sel_y,
                     int32_t* out);
int axbxp_pe_mac(int32_t acc, const axbxp_scalar* w, uint8_t sel_w, const axbxp_scalar* a,
                 uint8_t sel_a, int32_t* acc_out, int* saturated);

/* ---- design space ------------------------------------------------------ */

typedef struct {
    int k;
    int kept_w, kept_a;
    int mode; /* AXBXP_MODE_* */
} axbxp_config;

/* k = 0 enumerates every block width; returns the canonical search order */
int axbxp_pruned_space(int k, int mode, axbxp_config* out, size_t capacity, size_t* count);
int axbxp_size_constrained(uint64_t* out);
int axbxp_size_pruned_eq5(uint64_t* out);
/* exact count as a decimal string (exceeds 64 bits from bw = 8 up) */
int axbxp_size_unconstrained(int bw, char** out);

/* ---- memory footprint -------------------------------------------------- */

int axbxp_data_index_bits(int k, int kept, int mode, int* out);
int axbxp_per_element_bits(int k, int kept, int mode, int* out);

/* ---- AXBP tensors ------------------------------------------------------ */

typedef struct axbxp_tensor axbxp_tensor;

int axbxp_tensor_convert(const int8_t* values, const uint32_t* dims, int rank, int k, int kept,
                         int mode, double scale, axbxp_tensor** out);
int axbxp_tensor_load(const char* path, axbxp_tensor** out);
int axbxp_tensor_save(const axbxp_tensor* t, const char* path);
int axbxp_tensor_info(const axbxp_tensor* t, int* k, int* n, int* kept, int* mode, double* scale,
                      uint64_t* element_count);
int axbxp_tensor_footprint(const axbxp_tensor* t, uint64_t* payload_bits, uint64_t* header_bits,
                           int* element_bits);
/* writes element_count reconstructed int8 values */
int axbxp_tensor_reconstruct(const axbxp_tensor* t, int8_t* out, size_t capacity);
void axbxp_tensor_free(axbxp_tensor* t);

/* ---- models ------------------------------------------------------------ */

typedef struct axbxp_model axbxp_model;

/* trains the bundled-task MLP on the dataset's train split */
int axbxp_train(const char* dataset_csv, int epochs, unsigned seed, axbxp_model** out);
int axbxp_model_load(const char* checkpoint_dir, axbxp_model** out);
int axbxp_model_save(const axbxp_model* m, const char* checkpoint_dir);
/* split: 0 = test, 1 = train, 2 = all; subset 0 = everything */
int axbxp_model_evaluate(const axbxp_model* m, const char* dataset_csv, int split, int subset,
                         int approximate, double* accuracy);
int axbxp_model_mac_layer_count(const axbxp_model* m, int* out);
/* cfg == NULL pins the layer to exact computation */
int axbxp_model_set_config(axbxp_model* m, int mac_index, const axbxp_config* cfg);
void axbxp_model_free(axbxp_model* m);

/* ---- greedy configuration search --------------------------------------- */

typedef struct {
    double gamma;
    int k_tgt;
    int mode;
    int eval_subset;
    int max_epoch;
    unsigned seed;
    int pin_first_last;
    int finetune_per_candidate;
} axbxp_search_settings;

/* applies the assignment to the model and emits the search report */
int axbxp_search(axbxp_model* m, const char* dataset_csv, const axbxp_search_settings* settings,
                 char** report_json, int* best_effort);

/* ---- analysis / cost report --------------------------------------------- */

typedef struct {
    int k;      /* analysis block width for unconfigured layers */
    int kept;   /* analysis kept-block count for unconfigured layers */
    int bins;   /* histogram bins */
    int rows, cols;
    int fabric; /* AXBXP_FABRIC_* */
    int activation_samples;
    int csv; /* nonzero: CSV instead of JSON */
} axbxp_report_options;

/* dataset_csv may be NULL (weight analysis only) */
int axbxp_report(const axbxp_model* m, const char* dataset_csv,
                 const axbxp_report_options* options, char** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* AXBXP_H */
