#ifndef OSCLAB_H
#define OSCLAB_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(OSCLAB_BUILDING)
#define OSC_API __attribute__((visibility("default")))
#else
#define OSC_API
#endif

/* Return codes of every osc_* call that can fail. */
typedef enum osc_status {
  OSC_OK = 0,
  OSC_ERR_USAGE = 1,      /* null argument or malformed call */
  OSC_ERR_VALIDATION = 2, /* the inputs were rejected */
  OSC_ERR_NUMERICAL = 3   /* the numerics failed to converge or overflowed */
} osc_status;

typedef struct osc_record osc_record;
typedef struct osc_phase osc_phase;

OSC_API const char* osc_version(void);

/* Message and error name of the last failure on the calling thread. */
OSC_API const char* osc_last_error(void);
OSC_API const char* osc_last_error_name(void);

/* Parses the JSON config, runs or loads it from the cache.
   Numerical failures that still produce outputs return OSC_ERR_NUMERICAL with *out set. */
OSC_API int osc_run(const char* config_json, osc_record** out);

/* Manifest of the run as JSON; owned by the record. */
OSC_API const char* osc_record_json(const osc_record* rec);
OSC_API const char* osc_record_directory(const osc_record* rec);
OSC_API const char* osc_record_hash(const osc_record* rec);
OSC_API int osc_record_cached(const osc_record* rec);
OSC_API void osc_record_free(osc_record* rec);

/* Resolved config with defaults and its hash; *out is released with osc_string_free. */
OSC_API int osc_resolve_config(const char* config_json, char** out);
OSC_API int osc_config_hash(const char* config_json, char** out);
OSC_API const char* osc_config_schema(void);
OSC_API void osc_string_free(char* s);

OSC_API int osc_phase_parse(const char* literal, osc_phase** out);
OSC_API const char* osc_phase_literal(const osc_phase* phase);
OSC_API int osc_phase_eval(const osc_phase* phase, double x, double y, double* out);
OSC_API void osc_phase_free(osc_phase* phase);

#ifdef __cplusplus
}
#endif

#endif
