#include "sml/sml.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "experiments.hpp"
#include "manifold.hpp"

using namespace sml;

namespace {

thread_local std::string g_last_error;

sml_status status_of(const Error& e) {
    switch (e.kind) {
        case ErrorKind::InvalidArgument: return SML_ERR_INVALID_ARGUMENT;
        case ErrorKind::ChartDomain: return SML_ERR_CHART_DOMAIN;
        case ErrorKind::SingularJacobian: return SML_ERR_SINGULAR_JACOBIAN;
        case ErrorKind::Numeric: return SML_ERR_NUMERIC;
        case ErrorKind::CheckFailed: return SML_CHECK_FAILED;
    }
    return SML_ERR_INTERNAL;
}

template <typename Fn>
sml_status guarded(Fn&& fn) {
    try {
        fn();
        return SML_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SML_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SML_ERR_INTERNAL;
    }
}

Vec to_vec(const double* data, int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = data[i];
    return v;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

struct sml_model {
    Manifold impl;
};

extern "C" {

const char* sml_status_name(sml_status status) {
    switch (status) {
        case SML_OK: return "ok";
        case SML_ERR_INVALID_ARGUMENT: return "invalid-argument";
        case SML_ERR_CHART_DOMAIN: return "chart-domain";
        case SML_ERR_SINGULAR_JACOBIAN: return "singular-jacobian";
        case SML_ERR_NUMERIC: return "numeric";
        case SML_CHECK_FAILED: return "check-failed";
        case SML_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* sml_last_error(void) { return g_last_error.c_str(); }

sml_status sml_model_create(const char* model_json, sml_model** out) {
    if (!model_json || !out) {
        g_last_error = "null argument";
        return SML_ERR_INVALID_ARGUMENT;
    }
    *out = nullptr;
    return guarded([&] { *out = new sml_model{Manifold::from_json_text(model_json)}; });
}

void sml_model_free(sml_model* model) { delete model; }

int sml_model_dim(const sml_model* model) { return model ? model->impl.dim() : 0; }

sml_status sml_metric_at(const sml_model* model, const double* q, double* g_out) {
    if (!model || !q || !g_out) {
        g_last_error = "null argument";
        return SML_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const int n = model->impl.dim();
        const Mat g = model->impl.metric_at(to_vec(q, n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g_out[i * n + j] = g(i, j);
    });
}

sml_status sml_cometric_norm(const sml_model* model, const double* q, const double* p,
                             double* out) {
    if (!model || !q || !p || !out) {
        g_last_error = "null argument";
        return SML_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const int n = model->impl.dim();
        *out = model->impl.cometric_norm(to_vec(q, n), to_vec(p, n));
    });
}

sml_status sml_distance(const sml_model* model, const double* q0, const double* q1, double* out,
                        int* method_out) {
    if (!model || !q0 || !q1 || !out) {
        g_last_error = "null argument";
        return SML_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const int n = model->impl.dim();
        const DistanceResult r = model->impl.distance(to_vec(q0, n), to_vec(q1, n));
        *out = r.value;
        if (method_out) *method_out = static_cast<int>(r.method);
    });
}

sml_status sml_exp_map(const sml_model* model, const double* q, const double* v, double* q_out) {
    if (!model || !q || !v || !q_out) {
        g_last_error = "null argument";
        return SML_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const int n = model->impl.dim();
        const Vec y = model->impl.exp_map(to_vec(q, n), to_vec(v, n));
        for (int i = 0; i < n; ++i) q_out[i] = y[i];
    });
}

sml_status sml_d_exp(const sml_model* model, const double* q, const double* v, double* m_out) {
    if (!model || !q || !v || !m_out) {
        g_last_error = "null argument";
        return SML_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const int n = model->impl.dim();
        const Mat m = model->impl.d_exp(to_vec(q, n), to_vec(v, n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m_out[i * n + j] = m(i, j);
    });
}

sml_status sml_injectivity_radius(const sml_model* model, double* out, int* assumed_out) {
    if (!model || !out) {
        g_last_error = "null argument";
        return SML_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const Bound b = model->impl.injectivity_radius();
        *out = b.value;
        if (assumed_out) *assumed_out = b.assumed ? 1 : 0;
    });
}

sml_status sml_constant_a(const sml_model* model, int sample_budget, double* out,
                          int* assumed_out) {
    if (!model || !out) {
        g_last_error = "null argument";
        return SML_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const Bound b = model->impl.constant_A(sample_budget > 0 ? sample_budget : 10000);
        *out = b.value;
        if (assumed_out) *assumed_out = b.assumed ? 1 : 0;
    });
}

sml_status sml_delta0(const sml_model* model, double* out) {
    if (!model || !out) {
        g_last_error = "null argument";
        return SML_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] { *out = model->impl.delta0(); });
}

sml_status sml_run(const char* command, const char* config_json, char** out_doc) {
    if (!command || !config_json || !out_doc) {
        g_last_error = "null argument";
        return SML_ERR_INVALID_ARGUMENT;
    }
    *out_doc = nullptr;
    int exit_code = 0;
    const sml_status st = guarded([&] {
        const ExperimentConfig cfg = ExperimentConfig::from_json_text(config_json);
        const RunResult res = run_command(command, cfg);
        exit_code = res.exit_code;
        *out_doc = dup_string(res.document);
        if (!*out_doc) fail(ErrorKind::Numeric, "allocation failed");
    });
    if (st != SML_OK) return st;
    if (exit_code != 0) {
        g_last_error = "a certified check or audit failed; see the report document";
        return SML_CHECK_FAILED;
    }
    return SML_OK;
}

void sml_string_free(char* s) { std::free(s); }

}  // extern "C"
