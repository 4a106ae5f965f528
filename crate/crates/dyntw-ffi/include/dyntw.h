/* C interface to the dyntw dynamic tree decomposition engine. */

#ifndef DYNTW_H
#define DYNTW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call. Anything but `Ok` leaves the out-parameters
// untouched.
typedef enum DyntwStatus {
  DYNTW_STATUS_OK = 0,
  // A required pointer argument was null.
  DYNTW_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  DYNTW_STATUS_INVALID_UTF8 = 2,
  // Rejected input: bad parameters, vertex out of range, unknown
  // automaton name.
  DYNTW_STATUS_INVALID_ARGUMENT = 3,
  // The edge to add is already present.
  DYNTW_STATUS_DUPLICATE_EDGE = 4,
  // The edge to delete is not present.
  DYNTW_STATUS_MISSING_EDGE = 5,
  // The structure can no longer be maintained; the promised width
  // bound did not hold for the update stream.
  DYNTW_STATUS_PROMISE_VIOLATED = 6,
  // An internal invariant audit failed.
  DYNTW_STATUS_SELFCHECK_FAILED = 7,
  // A panic was caught at the boundary and the session is wrecked.
  DYNTW_STATUS_PANICKED = 8,
} DyntwStatus;

// Opaque session handle; create with `dyntw_session_new*`, destroy
// with `dyntw_session_free`.
typedef struct DyntwSession DyntwSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a session over `n` isolated vertices under the promise that
// the graph's treewidth stays at most `k` (at least 1) at all times.
//
// # Safety
// `out` must be a valid pointer to a `DyntwSession*` slot. On `Ok` it
// receives an owned handle that must be released with
// `dyntw_session_free`.
enum DyntwStatus dyntw_session_new(uint32_t n, uint32_t k, struct DyntwSession **out);

// Creates a session with the internal well-linkedness bound set
// directly; `dyntw_session_new` is the ordinary entry point.
//
// # Safety
// Same contract as `dyntw_session_new`.
enum DyntwStatus dyntw_session_new_wl(uint32_t n, uint32_t kwl, struct DyntwSession **out);

// Creates a session with explicit degree-cap and balance-distance
// overrides on top of the well-linkedness bound `kwl`. Rejects
// combinations the balance argument cannot support (cap below 3, or
// distance below `2 * (cap - 1)`).
//
// # Safety
// Same contract as `dyntw_session_new`.
enum DyntwStatus dyntw_session_new_with_params(uint32_t n,
                                               uint32_t kwl,
                                               uint64_t degree_cap,
                                               uint64_t balance_dist,
                                               struct DyntwSession **out);

// Releases a session. `s` may be null.
//
// # Safety
// `s` must be null or a handle from `dyntw_session_new*` that has not
// been freed already.
void dyntw_session_free(struct DyntwSession *s);

// Message for the most recent failing call on this session, or null
// if the last call succeeded.
//
// # Safety
// `s` must be a live session handle. The returned pointer belongs to
// the session and is invalidated by the next call on it.
const char *dyntw_last_error(const struct DyntwSession *s);

// Inserts the edge `u v`, updating the maintained decomposition and
// every attached automaton.
//
// # Safety
// `s` must be a live session handle and must not be used concurrently
// from another thread.
enum DyntwStatus dyntw_add_edge(struct DyntwSession *s, uint32_t u, uint32_t v);

// Deletes the edge `u v`.
//
// # Safety
// Same contract as `dyntw_add_edge`.
enum DyntwStatus dyntw_delete_edge(struct DyntwSession *s, uint32_t u, uint32_t v);

// Width of the maintained tree decomposition (largest bag size minus
// one).
//
// # Safety
// `s` must be a live session handle; `out` must point to a writable
// `uint64_t`.
enum DyntwStatus dyntw_width(struct DyntwSession *s, uint64_t *out);

// Depth of the maintained tree decomposition (nodes on the longest
// root-to-leaf path).
//
// # Safety
// Same contract as `dyntw_width`.
enum DyntwStatus dyntw_depth(struct DyntwSession *s, uint64_t *out);

// Attaches an automaton by registry name (`mis`, `domset`, `color<q>`
// with `q >= 2`) so it is maintained from now on. Attaching an
// already-attached name is a no-op.
//
// # Safety
// `s` must be a live session handle; `name` must be a NUL-terminated
// string.
enum DyntwStatus dyntw_attach_automaton(struct DyntwSession *s, const char *name);

// Current root answer of the named automaton, attaching it first if
// needed. Counts print in decimal, feasibility as `true`/`false`.
//
// # Safety
// `s` must be a live session handle; `name` must be a NUL-terminated
// string; `out` must point to a writable `char*` slot. On `Ok` the
// slot receives an owned string to release with `dyntw_string_free`.
enum DyntwStatus dyntw_query(struct DyntwSession *s, const char *name, char **out);

// The maintained decomposition in canonical text form, one node per
// line: `id parentId bag=(v,..) edges=((u,v),..)`, root first with
// parent `-1`.
//
// # Safety
// `s` must be a live session handle; `out` must point to a writable
// `char*` slot, released with `dyntw_string_free` on `Ok`.
enum DyntwStatus dyntw_decomposition_text(struct DyntwSession *s, char **out);

// Per-operation statistics ledger as a JSON array, one entry per
// update since the session was created.
//
// # Safety
// Same contract as `dyntw_decomposition_text`.
enum DyntwStatus dyntw_stats_json(struct DyntwSession *s, char **out);

// Audits every internal invariant of the session; expensive, meant
// for debugging bindings.
//
// # Safety
// `s` must be a live session handle.
enum DyntwStatus dyntw_selfcheck(struct DyntwSession *s);

// Releases a string produced by this library. `p` may be null.
//
// # Safety
// `p` must be null or an unfreed string from this library.
void dyntw_string_free(char *p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYNTW_H */
