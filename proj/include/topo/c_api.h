/* C-compatible entry points for foreign hosts (the Python module sits on these).
 *
 * Buffers are contiguous and row-major with the last axis fastest. Likelihoods
 * are class-major: value(k, i) = likelihood[k * sites + i]. Nothing is retained
 * after a call returns. A `num_classes` of 0 takes the count from the config's
 * `classes` line. Every function returns 0 on success and nonzero on
 * failure, with a message copied into `err` (truncated to `err_len`).
 */
#ifndef TOPO_C_API_H
#define TOPO_C_API_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define TOPO_C_API_VERSION 1

int topo_api_version(void);

/* Critical-site mask for a label buffer. `constraint_cfg` is config text (see
 * README); `conn` overrides its `conn` directive when non-null and non-empty.
 * `mask_out` receives one 0/1 byte per site. */
int topo_detect_u8(const uint8_t* labels, const size_t* dims, size_t ndim, unsigned num_classes,
                   const char* constraint_cfg, const char* conn, uint8_t* mask_out, size_t* violations,
                   size_t* foreground, char* err, size_t err_len);

/* Masked interaction loss L_ti with V taken from argmax(likelihood).
 * `surrogate` is "ce", "mse" or "dice". `grad_out` (may be null) receives
 * dL_ti/df with the likelihood's layout. CE requires normalized input. */
int topo_loss_ti_f32(const float* likelihood, const uint8_t* gt, const size_t* dims, size_t ndim,
                     unsigned num_classes, const char* constraint_cfg, const char* conn, const char* surrogate,
                     double* l_ti, double* grad_out, char* err, size_t err_len);

#ifdef __cplusplus
}
#endif

#endif /* TOPO_C_API_H */
