/* Generated by cbindgen. Do not edit. */

#ifndef TROJAN_GAME_H
#define TROJAN_GAME_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TgStatus {
  TG_STATUS_OK = 0,
  TG_STATUS_INVALID_GAME = 1,
  TG_STATUS_INVALID_STRATEGY = 2,
  TG_STATUS_PROBABILITY_OUT_OF_RANGE = 3,
  TG_STATUS_ALPHA_OUT_OF_RANGE = 4,
  TG_STATUS_DIMENSION_MISMATCH = 5,
  TG_STATUS_UNKNOWN_STRATEGY = 6,
  TG_STATUS_RANK_DEFICIENT = 7,
  TG_STATUS_REDUCED_SUPPORT = 8,
  TG_STATUS_EMPTY_FAMILY = 9,
  TG_STATUS_NO_ROOT_IN_BRACKET = 10,
  TG_STATUS_INVALID_CONFIG = 11,
  TG_STATUS_SCENARIO = 12,
  TG_STATUS_IO = 13,
  TG_STATUS_NULL_POINTER = 14,
  TG_STATUS_BUFFER_TOO_SMALL = 15,
  TG_STATUS_PANIC = 16,
} TgStatus;

typedef enum TgModelKind {
  TG_MODEL_KIND_EUT = 0,
  TG_MODEL_KIND_PT = 1,
} TgModelKind;

// Result of a fictitious-play run.
typedef struct TgEquilibrium TgEquilibrium;

// A validated game and its payoff matrix.
typedef struct TgGame TgGame;

// Behavioral model. The alphas are ignored for `TG_MODEL_KIND_EUT`.
typedef struct TgModel {
  enum TgModelKind kind;
  double alpha_d;
  double alpha_a;
} TgModel;

// Learning options. Initial beliefs are the defaults for the game.
typedef struct TgFpOptions {
  struct TgModel model;
  // `M`; learning stops once beliefs move less than `1/M` over a checkpoint gap.
  double convergence_m;
  uint64_t checkpoint_gap;
  uint64_t max_iterations;
} TgFpOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` as a
// NUL-terminated string, truncating if needed. Returns the message length in
// bytes, without the terminator.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t tg_last_error_message(uint8_t *buf, size_t len);

// Creates a game with `n` trojan types labelled `A`, `B`, ... and a test
// budget `k`.
//
// # Safety
// `damages` and `fines` must be valid for `n` values; `out` must be writable.
enum TgStatus tg_game_new(const double *damages,
                          const double *fines,
                          size_t n,
                          size_t k,
                          struct TgGame **out);

// The four-trojan case study (damages 1, 2, 4, 12; two tests) with a uniform fine.
//
// # Safety
// `out` must be writable.
enum TgStatus tg_game_paper_case(double fine, struct TgGame **out);

// # Safety
// `game` must be null or a handle from this library that has not been freed.
void tg_game_free(struct TgGame *game);

// Number of defender strategies (rows) and attacker strategies (columns).
//
// # Safety
// `game` must be a live handle; the outputs must be writable.
enum TgStatus tg_game_dims(const struct TgGame *game, size_t *num_defender, size_t *num_attacker);

// Defender utilities, row-major with one row per defender subset in
// lexicographic order.
//
// # Safety
// `game` must be a live handle; `out` must be valid for `len` values.
enum TgStatus tg_game_payoff_matrix(const struct TgGame *game, double *out, size_t len);

// # Safety
// `out` must be writable.
enum TgStatus tg_prelec_weight(double p, double alpha, double *out);

// # Safety
// `out` must be writable.
enum TgStatus tg_prelec_inverse(double q, double alpha, double *out);

// Defaults: expected utility, `M = 1000`, checkpoint gap 1000, at most
// 10^7 iterations.
struct TgFpOptions tg_fp_options_default(void);

// Runs fictitious play. `options` may be null for the defaults.
//
// # Safety
// `game` must be a live handle, `options` null or readable, `out` writable.
enum TgStatus tg_fictitious_play(const struct TgGame *game,
                                 const struct TgFpOptions *options,
                                 struct TgEquilibrium **out);

// # Safety
// `eq` must be null or a handle from this library that has not been freed.
void tg_equilibrium_free(struct TgEquilibrium *eq);

// Copies the defender and attacker strategies.
//
// # Safety
// `eq` must be a live handle; the buffers must be valid for their lengths.
enum TgStatus tg_equilibrium_strategies(const struct TgEquilibrium *eq,
                                        double *p_d,
                                        size_t len_d,
                                        double *p_a,
                                        size_t len_a);

// Objective game value and the utilities each player perceives.
//
// # Safety
// `eq` must be a live handle; the outputs must be writable.
enum TgStatus tg_equilibrium_value(const struct TgEquilibrium *eq,
                                   double *objective,
                                   double *perceived_d,
                                   double *perceived_a);

// Iteration count and whether the belief criterion was met.
//
// # Safety
// `eq` must be a live handle; the outputs must be writable.
enum TgStatus tg_equilibrium_status(const struct TgEquilibrium *eq,
                                    uint64_t *iterations,
                                    bool *converged);

// Indifference residuals, each the larger of spread and violation.
//
// # Safety
// `eq` must be a live handle; the outputs must be writable.
enum TgStatus tg_equilibrium_residuals(const struct TgEquilibrium *eq,
                                       double *residual_d,
                                       double *residual_a);

// Full-support expected-utility attacker equilibrium.
//
// # Safety
// `game` must be a live handle; `p_a` must be valid for `len` values.
enum TgStatus tg_attacker_msne_eut(const struct TgGame *game, double *p_a, size_t len);

// Attacker equilibrium when the defender weights probabilities with `alpha_d`.
//
// # Safety
// `game` must be a live handle; `p_a` must be valid for `len` values.
enum TgStatus tg_pt_attacker_msne(const struct TgGame *game,
                                  double alpha_d,
                                  double *p_a,
                                  size_t len);

// Numerical rank of the payoff matrix.
//
// # Safety
// `game` must be a live handle; `out` must be writable.
enum TgStatus tg_matrix_rank(const struct TgGame *game, size_t *out);

// Uniform fine in `[lo, hi]` at which the expected-utility game value is
// zero, and the attacker strategy there. Damages are taken from `game`.
//
// # Safety
// `game` must be a live handle; `fine` writable; `p_a` null or valid for `len` values.
enum TgStatus tg_eut_fine_threshold(const struct TgGame *game,
                                    double lo,
                                    double hi,
                                    double *fine,
                                    double *p_a,
                                    size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TROJAN_GAME_H */
