/* C interface to the critrel transversality certifier.
 *
 * Conventions:
 *  - Fallible functions return an int status (CRITREL_STATUS_*).
 *  - Strings returned through `char **out` parameters are owned by the
 *    caller and must be released with critrel_string_free().
 *  - critrel_last_error_message() describes the most recent failure on the
 *    calling thread; the pointer stays valid until the next failing call.
 *  - Pass 0 for horizon/tol/samples/threshold to use the defaults.
 *
 * This header mirrors crates/ffi/src/lib.rs; regenerate with cbindgen
 * (cbindgen.toml sits next to the crate manifest) or keep it in sync by
 * hand when the surface changes.
 */

#ifndef CRITREL_H
#define CRITREL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. */
#define CRITREL_STATUS_OK 0
#define CRITREL_STATUS_NEGATIVE 1
#define CRITREL_STATUS_INVALID 2
#define CRITREL_STATUS_UNCERTIFIABLE 3
#define CRITREL_STATUS_INTERNAL 4
#define CRITREL_STATUS_NULL_POINTER 5

/* Opaque handle to a rational map. */
typedef struct CritrelMap CritrelMap;

/* Error reporting. */
const char *critrel_last_error_message(void);
void critrel_string_free(char *s);

/* Map handles. */
int critrel_map_new(const char *spec, CritrelMap **out);
int critrel_map_from_coefficients(const double *num,
                                  size_t num_terms,
                                  const double *den,
                                  size_t den_terms,
                                  CritrelMap **out);
int critrel_map_degree(const CritrelMap *map);
int critrel_map_eval(const CritrelMap *map,
                     double re,
                     double im,
                     double *out_re,
                     double *out_im);
void critrel_map_free(CritrelMap *map);

/* Report commands. The JSON payloads match the critrel CLI byte for byte. */
int critrel_analyze_json(const char *spec,
                         size_t horizon,
                         double tol,
                         uint64_t seed,
                         char **out_json);
int critrel_relations_json(const char *spec,
                           size_t horizon,
                           double tol,
                           uint64_t seed,
                           char **out_json);
int critrel_certify_json(const char *spec,
                         const char *chart,
                         const char *sigma,
                         size_t horizon,
                         double tol,
                         uint64_t seed,
                         char **out_json);
int critrel_pushforward_json(const char *spec,
                             const char *relation,
                             size_t samples,
                             uint64_t seed,
                             char **out_json);
int critrel_lattes_demo_json(const char *a, uint64_t seed, char **out_json);
int critrel_deficit_check_json(const char *spec,
                               const char *relation,
                               double threshold,
                               uint64_t seed,
                               char **out_json);
int critrel_map_certify_json(const CritrelMap *map,
                             const char *chart,
                             size_t horizon,
                             double tol,
                             uint64_t seed,
                             char **out_json);

#ifdef __cplusplus
}
#endif

#endif /* CRITREL_H */
