#ifndef SIRSH_H
#define SIRSH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum sirsh_status {
  SIRSH_STATUS_OK = 0,
  SIRSH_STATUS_NULL_POINTER = 1,
  SIRSH_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The quantity is not defined for these parameters.
   */
  SIRSH_STATUS_NOT_APPLICABLE = 3,
  SIRSH_STATUS_NUMERICAL_FAILURE = 4,
  /**
   * A requested event or index does not exist.
   */
  SIRSH_STATUS_NOT_FOUND = 5,
  SIRSH_STATUS_PANIC = 6,
} sirsh_status;

typedef struct sirsh_params sirsh_params;

typedef struct sirsh_trajectory sirsh_trajectory;

/**
 * Compartment fractions `(S, I, C, H)`.
 */
typedef struct sirsh_state {
  double s;
  double i;
  double c;
  double h;
} sirsh_state;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *sirsh_last_error(void);

/**
 * Creates a parameter set. Pass `allow_unordered != 0` to accept
 * `gamma_i > gamma_c`.
 */
enum sirsh_status sirsh_params_new(double beta,
                                   double theta,
                                   double gamma_i,
                                   double gamma_c,
                                   double gamma_h,
                                   double eps,
                                   int32_t allow_unordered,
                                   struct sirsh_params **out);

void sirsh_params_free(struct sirsh_params *p);

enum sirsh_status sirsh_r0(const struct sirsh_params *p, double *out);

/**
 * Endemic equilibrium; `exact == 0` selects the leading-order formula.
 */
enum sirsh_status sirsh_endemic_equilibrium(const struct sirsh_params *p,
                                            int32_t exact,
                                            struct sirsh_state *out);

/**
 * Severity with `R0 = 1`; `NotApplicable` when no such value lies in (0, 1).
 */
enum sirsh_status sirsh_theta_star(const struct sirsh_params *p, double *out);

/**
 * Worst-case severity and case number (1 to 4). `theta_tilde` is NaN for
 * case 4. The severity stored in `p` is ignored.
 */
enum sirsh_status sirsh_worst_theta(const struct sirsh_params *p,
                                    int32_t *case_id,
                                    double *theta_tilde);

/**
 * Predicted exit point and slow exit time for an entry at `s_entry`.
 */
enum sirsh_status sirsh_entry_exit(const struct sirsh_params *p,
                                   double s_entry,
                                   double *s_exit,
                                   double *tau_exit);

/**
 * Simulates an outbreak seeded with `total_infected` up to `t_max`.
 * Non-positive `rtol`/`atol` select the defaults.
 */
enum sirsh_status sirsh_simulate(const struct sirsh_params *p,
                                 double total_infected,
                                 double rtol,
                                 double atol,
                                 double t_max,
                                 struct sirsh_trajectory **out);

void sirsh_trajectory_free(struct sirsh_trajectory *t);

/**
 * Number of stored points; 0 for a null handle.
 */
size_t sirsh_trajectory_len(const struct sirsh_trajectory *t);

/**
 * Time, state and cost integral `Q = integral of H` at stored point `index`.
 */
enum sirsh_status sirsh_trajectory_point(const struct sirsh_trajectory *t,
                                         size_t index,
                                         double *time,
                                         struct sirsh_state *state,
                                         double *hosp_integral);

/**
 * End time of the first wave, or `NotFound`.
 */
enum sirsh_status sirsh_trajectory_wave_end(const struct sirsh_trajectory *t, double *out);

/**
 * Interpolated state at time `at` inside the simulated horizon.
 */
enum sirsh_status sirsh_trajectory_state_at(const struct sirsh_trajectory *t,
                                            double at,
                                            struct sirsh_state *state);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIRSH_H */
