/* SPDX-License-Identifier: Apache-2.0 */

#ifndef IPICN_H
#define IPICN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IpicnStatus {
  IPICN_STATUS_OK = 0,
  IPICN_STATUS_NULL_ARGUMENT = 1,
  IPICN_STATUS_INVALID_UTF8 = 2,
  IPICN_STATUS_INVALID_INPUT = 3,
  IPICN_STATUS_SIMULATION = 4,
  IPICN_STATUS_BUFFER_TOO_SMALL = 5,
  IPICN_STATUS_PANIC = 6,
} IpicnStatus;

typedef enum IpicnMode {
  IPICN_MODE_ICN = 0,
  IPICN_MODE_IP = 1,
  IPICN_MODE_COMPARE = 2,
} IpicnMode;

/**
 * Opaque graph handle.
 */
typedef struct IpicnGraph IpicnGraph;

/**
 * Opaque rendezvous handle.
 */
typedef struct IpicnRendezvous IpicnRendezvous;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into this library from the same thread.
 */
const char *ipicn_last_error(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void ipicn_string_free(char *s);

/**
 * Parses and validates a topology document and assigns link identifiers
 * from `seed`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum IpicnStatus ipicn_graph_load(const char *json, uint64_t seed, struct IpicnGraph **out);

/**
 * # Safety
 * `g` must be null or a live handle from [`ipicn_graph_load`].
 */
void ipicn_graph_free(struct IpicnGraph *g);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t ipicn_graph_node_count(const struct IpicnGraph *g);

/**
 * Number of undirected links, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t ipicn_graph_link_count(const struct IpicnGraph *g);

/**
 * Node hosting the rendezvous function, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
uint32_t ipicn_graph_rv_node(const struct IpicnGraph *g);

struct IpicnRendezvous *ipicn_rendezvous_new(void);

/**
 * # Safety
 * `rv` must be null or a live handle from [`ipicn_rendezvous_new`].
 */
void ipicn_rendezvous_free(struct IpicnRendezvous *rv);

/**
 * Subscribes `client` to `name`. `out_events` (optional) receives the
 * number of publications the subscription matched.
 *
 * # Safety
 * `rv` must be a live handle, `name` a NUL-terminated string and
 * `out_events` null or writable.
 */
enum IpicnStatus ipicn_rendezvous_subscribe(struct IpicnRendezvous *rv,
                                            uint32_t client,
                                            const char *name,
                                            size_t *out_events);

/**
 * Removes a subscription. `out_events` (optional) receives the number of
 * affected publications.
 *
 * # Safety
 * As for [`ipicn_rendezvous_subscribe`].
 */
enum IpicnStatus ipicn_rendezvous_unsubscribe(struct IpicnRendezvous *rv,
                                              uint32_t client,
                                              const char *name,
                                              size_t *out_events);

/**
 * Publishes availability of an item. `out_subscribers` (optional) receives
 * the size of the matched subscriber set, 0 if nothing matched.
 *
 * # Safety
 * `rv` must be a live handle, `name` a NUL-terminated string and
 * `out_subscribers` null or writable.
 */
enum IpicnStatus ipicn_rendezvous_publish(struct IpicnRendezvous *rv,
                                          uint32_t client,
                                          const char *name,
                                          size_t *out_subscribers);

/**
 * Number of clients whose subscriptions cover the item `name`.
 *
 * # Safety
 * `rv` must be a live handle, `name` a NUL-terminated string and `out`
 * writable.
 */
enum IpicnStatus ipicn_rendezvous_match_count(const struct IpicnRendezvous *rv,
                                              const char *name,
                                              size_t *out);

/**
 * Parses a textual name and writes its canonical rendering into `buf`.
 *
 * # Safety
 * `text` must be NUL-terminated, `buf` writable for `cap` bytes and
 * `out_len` null or writable.
 */
enum IpicnStatus ipicn_name_normalize(const char *text, char *buf, size_t cap, size_t *out_len);

/**
 * Writes the name of the item carrying packets for `addr` (host byte
 * order) into `buf`.
 *
 * # Safety
 * `buf` must be writable for `cap` bytes and `out_len` null or writable.
 */
enum IpicnStatus ipicn_name_for_ip(uint32_t addr,
                                   bool external,
                                   char *buf,
                                   size_t cap,
                                   size_t *out_len);

/**
 * Decodes a wire packet. On success `out_payload_len` (optional) receives
 * the payload length.
 *
 * # Safety
 * `buf` must be readable for `len` bytes and `out_payload_len` null or
 * writable.
 */
enum IpicnStatus ipicn_packet_check(const uint8_t *buf, size_t len, size_t *out_payload_len);

/**
 * Runs a scenario and returns the canonical JSON report through `out`.
 * `seed` of 0 keeps the scenario's own seed.
 *
 * # Safety
 * `topology` and `scenario` must be NUL-terminated; `out` must be writable.
 * The returned string is freed with [`ipicn_string_free`].
 */
enum IpicnStatus ipicn_run(const char *topology,
                           const char *scenario,
                           enum IpicnMode mode,
                           uint64_t seed,
                           char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IPICN_H */
