#ifndef TELEOP_H
#define TELEOP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Sonar transducers per frame.
 */
#define TELEOP_SONAR_COUNT 8

/**
 * Result codes. Zero is success, everything else is negative.
 */
typedef enum TeleopStatus {
  TELEOP_STATUS_OK = 0,
  TELEOP_STATUS_NULL_POINTER = -1,
  TELEOP_STATUS_INVALID_ARGUMENT = -2,
  TELEOP_STATUS_CHECKSUM_MISMATCH = -3,
  TELEOP_STATUS_FRAMING = -4,
  TELEOP_STATUS_FIELD_PARSE = -5,
  TELEOP_STATUS_FIELD_RANGE = -6,
  TELEOP_STATUS_PARSE = -7,
  TELEOP_STATUS_SIMULATION = -8,
  TELEOP_STATUS_BUFFER_TOO_SMALL = -9,
  TELEOP_STATUS_PANIC = -10,
} TeleopStatus;

typedef enum TeleopMode {
  TELEOP_MODE_MANUAL = 0,
  TELEOP_MODE_ASSISTED = 1,
  TELEOP_MODE_AUTONOMY_SAFEPOINT = 2,
} TeleopMode;

/**
 * Opaque simulation handle.
 */
typedef struct TeleopSim TeleopSim;

typedef struct TeleopPose {
  double x;
  double y;
  double theta;
} TeleopPose;

/**
 * Fixed-size view of a telemetry frame. Missing echoes are NaN.
 */
typedef struct TeleopTelemetry {
  uint32_t seq;
  uint64_t stamp_ms;
  double battery_v;
  struct TeleopPose pose;
  double v;
  double w;
  double compass_deg;
  double latitude;
  double longitude;
  double sonar[TELEOP_SONAR_COUNT];
  uint32_t laser_count;
} TeleopTelemetry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating if needed. Returns the full message
 * length excluding the terminator; pass a null `buf` to query it.
 *
 * # Safety
 * `buf` must be null or point to `capacity` writable bytes.
 */
size_t teleop_last_error(char *buf, size_t capacity);

/**
 * One's-complement sum of 16-bit big-endian words, complemented.
 *
 * # Safety
 * `data` must point to `len` readable bytes (or be null with `len` 0).
 */
uint16_t teleop_checksum16(const uint8_t *data, size_t len);

/**
 * Decodes one telemetry packet into `frame`.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `frame` must be writable.
 */
enum TeleopStatus teleop_telemetry_decode(const uint8_t *data,
                                          size_t len,
                                          struct TeleopTelemetry *frame);

/**
 * Copies the laser ranges of a telemetry packet into `ranges` (metres, NaN
 * for no echo) and stores their number in `count`. `count` is set even when
 * the buffer is too small.
 *
 * # Safety
 * `data` must point to `len` readable bytes, `ranges` to `capacity` writable
 * doubles, and `count` must be writable.
 */
enum TeleopStatus teleop_telemetry_laser(const uint8_t *data,
                                         size_t len,
                                         double *ranges,
                                         size_t capacity,
                                         size_t *count);

/**
 * Forward speed limit in m/s for a smoothed delay and jitter, in ms.
 */
double teleop_adapt_speed(double delay_ms, double jitter_ms);

/**
 * Obstacle avoidance on eight sonar ranges (NaN or negative for no echo).
 *
 * # Safety
 * `sonar` must point to `TELEOP_SONAR_COUNT` readable doubles; `v_out` and `w_out` writable.
 */
enum TeleopStatus teleop_avoid(const double *sonar,
                               double v,
                               double w,
                               double *v_out,
                               double *w_out);

/**
 * Creates a loopback simulation. A null `scenario` uses the generated room
 * for `seed`; a null `script` just connects at t = 0. Delays follow the
 * built-in table seeded with `seed`.
 *
 * # Safety
 * `scenario` and `script` must be null or NUL-terminated; `handle` writable.
 */
enum TeleopStatus teleop_sim_new(const char *scenario,
                                 const char *script,
                                 uint64_t seed,
                                 struct TeleopSim **handle);

/**
 * Releases a handle from [`teleop_sim_new`]. Null is ignored.
 *
 * # Safety
 * `handle` must come from `teleop_sim_new` and not be used afterwards.
 */
void teleop_sim_free(struct TeleopSim *handle);

/**
 * Advances one 10 ms tick.
 *
 * # Safety
 * `handle` must be a live simulation handle.
 */
enum TeleopStatus teleop_sim_step(struct TeleopSim *handle);

/**
 * Runs until the clock reaches `t_ms`.
 *
 * # Safety
 * `handle` must be a live simulation handle.
 */
enum TeleopStatus teleop_sim_run_until(struct TeleopSim *handle, uint64_t t_ms);

/**
 * Simulation clock in ms, or 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or a live simulation handle.
 */
uint64_t teleop_sim_now_ms(const struct TeleopSim *handle);

/**
 * Ground-truth robot pose.
 *
 * # Safety
 * `handle` must be a live simulation handle and `pose` writable.
 */
enum TeleopStatus teleop_sim_pose(struct TeleopSim *handle, struct TeleopPose *pose);

/**
 * Current drive mode on the robot.
 *
 * # Safety
 * `handle` must be a live simulation handle and `mode` writable.
 */
enum TeleopStatus teleop_sim_mode(struct TeleopSim *handle, enum TeleopMode *mode);

/**
 * Number of collisions so far.
 *
 * # Safety
 * `handle` must be a live simulation handle and `count` writable.
 */
enum TeleopStatus teleop_sim_collisions(struct TeleopSim *handle, uint64_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TELEOP_H */
