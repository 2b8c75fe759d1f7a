/* C interface to the inkgraph recognizer. All strings returned through
 * `char**` out-parameters are owned by the caller and must be released with
 * ig_string_free. Functions return IG_OK or one of the error codes below;
 * ig_last_error() then describes the failure (per thread). */
#ifndef INKGRAPH_H
#define INKGRAPH_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define IG_API __declspec(dllexport)
#else
#define IG_API __attribute__((visibility("default")))
#endif

typedef enum ig_status {
  IG_OK = 0,
  IG_ERR_OTHER = 1,            /* bad arguments, I/O */
  IG_ERR_NO_INTERPRETATION = 2,
  IG_ERR_INVALID = 3,          /* parse, validation or data errors */
  IG_ERR_BUDGET = 4
} ig_status;

typedef struct ig_grammar ig_grammar;

IG_API const char* ig_version(void);
IG_API const char* ig_last_error(void);
IG_API void ig_string_free(char* s);

IG_API int ig_grammar_load(const char* path, ig_grammar** out);
IG_API void ig_grammar_free(ig_grammar* g);
/* Number of rules after normalization, or -1 on a null handle. */
IG_API int ig_grammar_rule_count(const ig_grammar* g);

/* Default configuration for "math" or "flowchart" as JSON. */
IG_API int ig_config_defaults(const char* profile, char** out_json);

/* Recognizes a stroke file. config_json may be NULL (math defaults) and may
 * omit any field. On an empty forest the result JSON is still written and
 * IG_ERR_NO_INTERPRETATION is returned. */
IG_API int ig_recognize(const ig_grammar* g, const char* strokes_path, const char* config_json, char** out_json);

/* stage: "hypotheses", "stk" or "forest". */
IG_API int ig_inspect(const ig_grammar* g, const char* strokes_path, const char* config_json, const char* stage,
                      char** out_text);

/* Writes `count` generated items into out_dir. profile: "math" or "flowchart". */
IG_API int ig_generate_corpus(const ig_grammar* g, const char* out_dir, int count, int max_symbols,
                              unsigned long long seed, const char* profile);

IG_API int ig_evaluate(const ig_grammar* g, const char* corpus_dir, const char* config_json, char** out_report_json,
                       char** out_table);

#ifdef __cplusplus
}
#endif

#endif
