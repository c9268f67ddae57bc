#ifndef RIDS_H
#define RIDS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Feature vector length expected by [`rids_model_predict`].
 */
#define RIDS_FEATURE_COUNT 16

/**
 * Result codes shared by every entry point.
 */
typedef enum RidsStatus {
  RIDS_STATUS_OK = 0,
  RIDS_STATUS_NULL_POINTER = 1,
  RIDS_STATUS_INVALID_ARGUMENT = 2,
  RIDS_STATUS_MODEL_FORMAT = 3,
  RIDS_STATUS_FRAME_FORMAT = 4,
  RIDS_STATUS_WIRE_FORMAT = 5,
  RIDS_STATUS_CONFIG_FORMAT = 6,
  RIDS_STATUS_OUT_OF_ORDER = 7,
  RIDS_STATUS_BUFFER_TOO_SMALL = 8,
  RIDS_STATUS_NO_DATA = 9,
  RIDS_STATUS_PANIC = 10,
} RidsStatus;

/**
 * Controller holding a classifier, AP profiles and the block list.
 */
typedef struct RidsController RidsController;

/**
 * A loaded classifier.
 */
typedef struct RidsModel RidsModel;

/**
 * Flood detector for one access point.
 */
typedef struct RidsMonitor RidsMonitor;

/**
 * Alarm raised by [`rids_controller_process`].
 */
typedef struct RidsAlarm {
  uint8_t ap[6];
  /**
   * Attack label code, 1..=5.
   */
  uint8_t attack;
  uint8_t has_attacker;
  uint8_t attacker[6];
  double confidence;
  uint64_t raised_at_us;
  uint64_t trigger_quantum;
} RidsAlarm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static, NUL-terminated description of a status code.
 */
const char *rids_status_message(enum RidsStatus status);

/**
 * Loads a serialized model. On success `*out` owns a new handle.
 *
 * # Safety
 * `data` must point to `len` readable bytes and `out` must be writable.
 */
enum RidsStatus rids_model_load(const uint8_t *data, size_t len, struct RidsModel **out);

/**
 * Model kind code: 0 logistic regression, 1 tree, 2 forest; 255 for null.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
uint8_t rids_model_kind(const struct RidsModel *model);

/**
 * Classifies one feature vector of [`RIDS_FEATURE_COUNT`] values and writes
 * the label code (0 Normal, 1..=5 attacks).
 *
 * # Safety
 * `features` must point to `RIDS_FEATURE_COUNT` doubles; `label` must be writable.
 */
enum RidsStatus rids_model_predict(const struct RidsModel *model,
                                   const double *features,
                                   uint8_t *label);

/**
 * Re-serializes a model into `buf`.
 *
 * # Safety
 * `buf` must have `cap` writable bytes; `out_len` must be writable.
 */
enum RidsStatus rids_model_serialize(const struct RidsModel *model,
                                     uint8_t *buf,
                                     size_t cap,
                                     size_t *out_len);

/**
 * # Safety
 * `model` must be null or a handle from [`rids_model_load`] not yet freed.
 */
void rids_model_free(struct RidsModel *model);

/**
 * Creates a monitor for the AP whose 6-byte BSSID is at `ap` and that
 * serves `users` associated stations.
 *
 * # Safety
 * `ap` must point to 6 bytes and `out` must be writable.
 */
enum RidsStatus rids_monitor_new(const uint8_t *ap, size_t users, struct RidsMonitor **out);

/**
 * Feeds one binary frame record. Frames must arrive in timestamp order.
 *
 * # Safety
 * `monitor` must be a live handle; `data` must point to `len` bytes.
 */
enum RidsStatus rids_monitor_push_frame(struct RidsMonitor *monitor,
                                        const uint8_t *data,
                                        size_t len);

/**
 * Closes every quantum ending at or before `end_us` and completes any open
 * capture.
 *
 * # Safety
 * `monitor` must be a live handle.
 */
enum RidsStatus rids_monitor_finish(struct RidsMonitor *monitor, uint64_t end_us);

/**
 * Number of quanta closed so far; 0 for null.
 *
 * # Safety
 * `monitor` must be null or a live handle.
 */
uint64_t rids_monitor_quantum_count(const struct RidsMonitor *monitor);

/**
 * Number of closed quanta that triggered a capture; 0 for null.
 *
 * # Safety
 * `monitor` must be null or a live handle.
 */
uint64_t rids_monitor_trigger_count(const struct RidsMonitor *monitor);

/**
 * Writes the oldest completed capture batch as a framed wire message and
 * removes it from the queue. Returns [`RidsStatus::NoData`] when none is
 * pending. On [`RidsStatus::BufferTooSmall`] the batch stays queued.
 *
 * # Safety
 * `monitor` must be a live handle; `buf` must have `cap` writable bytes.
 */
enum RidsStatus rids_monitor_next_batch(struct RidsMonitor *monitor,
                                        uint8_t *buf,
                                        size_t cap,
                                        size_t *out_len);

/**
 * # Safety
 * `monitor` must be null or a handle from [`rids_monitor_new`] not yet freed.
 */
void rids_monitor_free(struct RidsMonitor *monitor);

/**
 * Creates a controller from a model handle (copied, the caller keeps
 * ownership) and a NUL-terminated scenario config that lists the APs and
 * known stations.
 *
 * # Safety
 * `model` must be a live handle, `config` a valid C string, `out` writable.
 */
enum RidsStatus rids_controller_new(const struct RidsModel *model,
                                    const char *config,
                                    struct RidsController **out);

/**
 * Processes one framed capture-batch message. `*raised` is set to 1 and
 * `*alarm` filled when the batch raises an alarm, else `*raised` is 0.
 *
 * # Safety
 * `controller` must be a live handle; `data` must point to `len` bytes;
 * `alarm` and `raised` must be writable.
 */
enum RidsStatus rids_controller_process(const struct RidsController *controller,
                                        const uint8_t *data,
                                        size_t len,
                                        struct RidsAlarm *alarm,
                                        uint8_t *raised);

/**
 * Number of MAC addresses on the block list; 0 for null.
 *
 * # Safety
 * `controller` must be null or a live handle.
 */
size_t rids_controller_blocked_count(const struct RidsController *controller);

/**
 * Writes 1 to `*blocked` if the 6-byte MAC at `mac` is on the block list.
 *
 * # Safety
 * `controller` must be a live handle; `mac` must point to 6 bytes.
 */
enum RidsStatus rids_controller_is_blocked(const struct RidsController *controller,
                                           const uint8_t *mac,
                                           uint8_t *blocked);

/**
 * # Safety
 * `controller` must be null or a handle from [`rids_controller_new`] not yet freed.
 */
void rids_controller_free(struct RidsController *controller);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIDS_H */
