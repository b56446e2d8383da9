/* sml: symplectic metric library.
 *
 * C interface to a toolkit for Riemannian geometry, explicit symplectic
 * embeddings into disc-cotangent bundles, certified two-sided brackets for
 * the embedding-defined distance rho_W, and capacity computations.
 *
 * Conventions: chart points and covectors are arrays of `dim` doubles;
 * matrices are row-major dim x dim. All functions returning sml_status leave
 * a human-readable message for the calling thread in sml_last_error() on
 * failure.
 */
#ifndef SML_H
#define SML_H

#ifdef __cplusplus
extern "C" {
#endif

#ifndef SML_API
#define SML_API __attribute__((visibility("default")))
#endif

typedef enum {
    SML_OK = 0,
    SML_ERR_INVALID_ARGUMENT = 1,
    SML_ERR_CHART_DOMAIN = 2,
    SML_ERR_SINGULAR_JACOBIAN = 3,
    SML_ERR_NUMERIC = 4,
    SML_CHECK_FAILED = 5,
    SML_ERR_INTERNAL = 6
} sml_status;

SML_API const char* sml_status_name(sml_status status);

/* Message describing the most recent failure on this thread. */
SML_API const char* sml_last_error(void);

/* Opaque manifold model handle. */
typedef struct sml_model sml_model;

/* model_json: {"kind":"flat-torus","periods":[1.0,1.0]} |
 *             {"kind":"round-sphere","dim":2,"radius":0.159154943} |
 *             {"kind":"surface-of-revolution","profile":"2+cos(z)", ...} |
 *             {"kind":"chart-metric","domain":[[lo,hi],...],"g":[["...",...]],...}
 */
SML_API sml_status sml_model_create(const char* model_json, sml_model** out);
SML_API void sml_model_free(sml_model* model);
SML_API int sml_model_dim(const sml_model* model);

SML_API sml_status sml_metric_at(const sml_model* model, const double* q, double* g_out);
SML_API sml_status sml_cometric_norm(const sml_model* model, const double* q, const double* p,
                                     double* out);

/* method_out (optional): 0 closed form, 1 shooting, 2 graph-only. */
SML_API sml_status sml_distance(const sml_model* model, const double* q0, const double* q1,
                                double* out, int* method_out);

SML_API sml_status sml_exp_map(const sml_model* model, const double* q, const double* v,
                               double* q_out);

/* Derivative of exp_q at v in orthonormal frames (see library docs). */
SML_API sml_status sml_d_exp(const sml_model* model, const double* q, const double* v,
                             double* m_out);

/* assumed_out (optional): 1 when the value is a user-supplied bound or a
 * sampled estimate rather than a closed form. */
SML_API sml_status sml_injectivity_radius(const sml_model* model, double* out, int* assumed_out);
SML_API sml_status sml_constant_a(const sml_model* model, int sample_budget, double* out,
                                  int* assumed_out);
SML_API sml_status sml_delta0(const sml_model* model, double* out);

/* Batch experiment runner. command is one of:
 *   certify | rho | length | converge | dw | capacities | audit
 * config_json carries the model, neighborhood, command parameters, seed,
 * samples, tol, eps and format (csv|json). On success *out_doc receives a
 * NUL-terminated document allocated by the library; release it with
 * sml_string_free. SML_CHECK_FAILED means the run completed but a certified
 * check or audit failed; *out_doc still carries the report.
 */
SML_API sml_status sml_run(const char* command, const char* config_json, char** out_doc);

SML_API void sml_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SML_H */
