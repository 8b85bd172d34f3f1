/* C interface of the kvm library: Khovanov homology of braids and tangles
 * through Morse matchings on the delooped cube of resolutions.
 *
 * Every function returns a kvm_status. On failure the message of the last error
 * on the calling thread is available from kvm_last_error(). Strings handed out
 * through char** parameters are owned by the caller and released with
 * kvm_string_free(). Handles are released with their *_free function; passing
 * NULL to a *_free function is allowed.
 *
 * All functions are safe to call from several threads on distinct handles.
 */
#ifndef KVM_KVM_H
#define KVM_KVM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define KVM_API __declspec(dllexport)
#else
#define KVM_API __attribute__((visibility("default")))
#endif

typedef enum kvm_status {
  KVM_OK = 0,
  KVM_ERR_PARSE = 1,
  KVM_ERR_INDEX_OUT_OF_RANGE = 2,
  KVM_ERR_NOT_A_BRAID = 3,
  KVM_ERR_SHAPE_MISMATCH = 4,
  KVM_ERR_COLOR_PLACEMENT = 5,
  KVM_ERR_NOT_CLOSED = 6,
  KVM_ERR_BAD_BASEPOINT = 7,
  KVM_ERR_MATCHING_NOT_ACYCLIC = 8,
  KVM_ERR_RECURSION_DEPTH = 9,
  KVM_ERR_NON_UNIQUE_ISO_PAIR = 10,
  KVM_ERR_INVERT_NON_ISO = 11,
  KVM_ERR_PATTERN_ABSENT = 12,
  KVM_ERR_BUDGET_EXCEEDED = 13,
  KVM_ERR_INTERNAL = 14,
  KVM_ERR_INVALID_ARGUMENT = 15
} kvm_status;

typedef enum kvm_strategy { KVM_STRATEGY_GREEDY = 0, KVM_STRATEGY_LEX = 1, KVM_STRATEGY_FULL_CUBE = 2 } kvm_strategy;
typedef enum kvm_matching_kind { KVM_MATCHING_LEX = 0, KVM_MATCHING_GREEDY = 1 } kvm_matching_kind;
typedef enum kvm_format { KVM_FORMAT_JSON = 0, KVM_FORMAT_CSV = 1, KVM_FORMAT_GRID = 2 } kvm_format;

/* A Morse presentation: a braid or a tangle diagram sliced into layers. */
typedef struct kvm_link kvm_link;
/* A computed homology table with its provenance. */
typedef struct kvm_result kvm_result;

KVM_API const char* kvm_version(void);
KVM_API const char* kvm_status_name(kvm_status s);
KVM_API const char* kvm_last_error(void);
KVM_API void kvm_string_free(char* s);

/* Braid words are whitespace separated signed generators: "1 -2 3" is
 * σ₁σ₂⁻¹σ₃ on `strands` strands. */
KVM_API kvm_status kvm_link_from_braid(const char* word, int strands, kvm_link** out);
/* torus_braid(strands, twists): (σ₁…σ_{strands-1})^|twists|, negative crossings when twists < 0 */
KVM_API kvm_status kvm_link_from_torus(int strands, int twists, kvm_link** out);
/* the tangle text format: "bottom: <b>" and one layer per line ("x 2", "X 1", "cap 1", "cup 3") */
KVM_API kvm_status kvm_link_from_tangle(const char* text, kvm_link** out);
KVM_API kvm_status kvm_link_mirror(const kvm_link* link, kvm_link** out);
/* the tangle text of the presentation */
KVM_API kvm_status kvm_link_serialize(const kvm_link* link, char** out);
/* "<strands>:<word>" for braids, the tangle text otherwise */
KVM_API kvm_status kvm_link_canonical(const kvm_link* link, char** out);
KVM_API int kvm_link_crossings(const kvm_link* link);
KVM_API void kvm_link_free(kvm_link* link);

typedef struct kvm_homology_options {
  int ring;             /* 0 for the integers, a prime p for F_p */
  int reduced;          /* nonzero: reduced homology */
  kvm_strategy strategy;
  int allow_fallback;   /* nonzero: a greedy matching that fails is replaced by lex */
  int mirror_positive;  /* nonzero: positive braids are computed from their mirror */
} kvm_homology_options;

/* Z, unreduced, greedy, fallback and mirroring on */
KVM_API void kvm_homology_options_init(kvm_homology_options* opts);
KVM_API kvm_status kvm_homology(const kvm_link* link, const kvm_homology_options* opts, kvm_result** out);
KVM_API kvm_status kvm_result_format(const kvm_result* r, kvm_format fmt, char** out);
KVM_API int kvm_result_fallback(const kvm_result* r);
/* number of (i, j) bidegrees with a nonzero group */
KVM_API size_t kvm_result_entry_count(const kvm_result* r);
/* entry k in (i, j) order: free rank and torsion count; torsion divisors are
 * written to `torsion` up to `torsion_cap` of them */
KVM_API kvm_status kvm_result_entry(const kvm_result* r, size_t k, int* i, int* j, int* free_rank, int64_t* torsion,
                                    size_t torsion_cap, size_t* torsion_count);
/* wall-clock milliseconds of the matching, Morse complex and homology phases */
KVM_API void kvm_result_timings(const kvm_result* r, double* matching, double* morse, double* homology);
KVM_API void kvm_result_free(kvm_result* r);

/* Matching report as JSON: unmatched cells, verification verdict, sizes per
 * degree, and the cycles of length at most `find_cycles` (0: no search).
 * dump_edges adds the matched-edge lines "<a> => <b> i=<j> u=<k>". */
KVM_API kvm_status kvm_match_report(const kvm_link* link, kvm_matching_kind kind, int find_cycles, int dump_edges,
                                    char** out_json);
/* G(C, M) as a Graphviz digraph */
KVM_API kvm_status kvm_cell_graph(const kvm_link* link, kvm_matching_kind kind, char** out_dot);

typedef struct kvm_sizes {
  uint64_t full;          /* cells of the delooped cube */
  uint64_t greedy;        /* unmatched cells of the greedy matching */
  uint64_t lex;           /* unmatched cells of the lexicographic matching */
  int greedy_acyclic;     /* 1 acyclic, 0 has a cycle, -1 undecided */
} kvm_sizes;
KVM_API kvm_status kvm_complex_sizes(const kvm_link* link, kvm_sizes* out);

/* Verification of the 4-strand torus braid machinery. `check` is one of
 * "W=U", "bijection", "base-lemmas", "recursion-A", "recursion-B",
 * "recursion-C", "vanishing", "gor". `params_json` is an object with optional
 * keys n_from, n_max, n_max_order, n_max_cover, a_max, ring, reduced, budget_n
 * (NULL for defaults). The reports go to out_json; *all_ok is set to 1 when no
 * check found a counterexample. KVM_ERR_BUDGET_EXCEEDED comes with a partial
 * report. */
KVM_API kvm_status kvm_verify(const char* check, const char* params_json, char** out_json, int* all_ok);
/* coefficients of the F₂ Poincaré series as "a,b,c_ab" lines */
KVM_API kvm_status kvm_gor_csv(int a_max, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif
