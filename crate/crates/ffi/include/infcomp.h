#ifndef INFCOMP_H
#define INFCOMP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum InfcompStatus {
  INFCOMP_STATUS_OK = 0,
  INFCOMP_STATUS_NULL_POINTER = 1,
  INFCOMP_STATUS_INVALID_ARGUMENT = 2,
  INFCOMP_STATUS_OUT_OF_RANGE = 3,
  INFCOMP_STATUS_PARSE = 4,
  INFCOMP_STATUS_EMPTY_INPUT = 5,
  INFCOMP_STATUS_IO = 6,
  INFCOMP_STATUS_DOMAIN = 7,
  INFCOMP_STATUS_DEGENERATE = 8,
  INFCOMP_STATUS_DIVERGED = 9,
  INFCOMP_STATUS_SOLVER = 10,
  /**
   * The output buffer is too short; the required length was written.
   */
  INFCOMP_STATUS_BUFFER_TOO_SMALL = 11,
  INFCOMP_STATUS_PANIC = 12,
} InfcompStatus;

typedef enum InfcompStrategy {
  INFCOMP_STRATEGY_FIRST = 0,
  INFCOMP_STRATEGY_LATEST = 1,
  INFCOMP_STRATEGY_MOST_SIMILAR = 2,
  INFCOMP_STRATEGY_HIGHEST_DEGREE = 3,
} InfcompStrategy;

typedef enum InfcompArrival {
  /**
   * `param1` is the rate.
   */
  INFCOMP_ARRIVAL_EXPONENTIAL = 0,
  /**
   * `param1`, `param2` are the bounds.
   */
  INFCOMP_ARRIVAL_UNIFORM = 1,
  /**
   * `param1`, `param2` are the log-mean and log-standard deviation.
   */
  INFCOMP_ARRIVAL_LOG_NORMAL = 2,
} InfcompArrival;

/**
 * Opaque node embedding.
 */
typedef struct InfcompEmbedding InfcompEmbedding;

/**
 * Opaque undirected graph.
 */
typedef struct InfcompGraph InfcompGraph;

/**
 * Simulation parameters. Fill with [`infcomp_sim_config_default`] first.
 */
typedef struct InfcompSimConfig {
  double a;
  double b;
  size_t seeds1;
  size_t seeds2;
  /**
   * Overload capacity; `SIZE_MAX` disables overload.
   */
  size_t capacity;
  double decay;
  enum InfcompStrategy strategy;
  enum InfcompArrival arrival;
  double arrival_param1;
  double arrival_param2;
  /**
   * Stop at this many influenced users; 0 runs to exhaustion.
   */
  size_t horizon;
  uint64_t rng_seed;
} InfcompSimConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library from the same thread.
 */
const char *infcomp_last_error(void);

/**
 * Loads an edge list.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out_graph` writable.
 */
enum InfcompStatus infcomp_graph_load(const char *path, struct InfcompGraph **out_graph);

/**
 * Generates a power-law configuration-model graph.
 *
 * # Safety
 * `out_graph` must be writable.
 */
enum InfcompStatus infcomp_graph_generate(size_t nodes,
                                          double exponent,
                                          uint64_t seed,
                                          struct InfcompGraph **out_graph);

/**
 * Releases a graph. Null is ignored.
 *
 * # Safety
 * `graph` must come from this library and not be used afterwards.
 */
void infcomp_graph_free(struct InfcompGraph *graph);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t infcomp_graph_node_count(const struct InfcompGraph *graph);

/**
 * Number of undirected edges, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t infcomp_graph_edge_count(const struct InfcompGraph *graph);

/**
 * # Safety
 * `graph` must be a live handle and `out_degree` writable.
 */
enum InfcompStatus infcomp_graph_degree(const struct InfcompGraph *graph,
                                        size_t node,
                                        size_t *out_degree);

/**
 * Writes the graph as an edge list.
 *
 * # Safety
 * `graph` must be a live handle and `path` a nul-terminated string.
 */
enum InfcompStatus infcomp_graph_write(const struct InfcompGraph *graph, const char *path);

/**
 * Embeds a graph with the default walk parameters and full-batch training.
 *
 * # Safety
 * `graph` must be a live handle and `out_embedding` writable.
 */
enum InfcompStatus infcomp_embed(const struct InfcompGraph *graph,
                                 size_t dim,
                                 size_t epochs,
                                 double learning_rate,
                                 uint64_t seed,
                                 struct InfcompEmbedding **out_embedding);

/**
 * Reads an embedding file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out_embedding` writable.
 */
enum InfcompStatus infcomp_embedding_load(const char *path,
                                          struct InfcompEmbedding **out_embedding);

/**
 * Releases an embedding. Null is ignored.
 *
 * # Safety
 * `embedding` must come from this library and not be used afterwards.
 */
void infcomp_embedding_free(struct InfcompEmbedding *embedding);

/**
 * Dimension, or 0 for a null handle.
 *
 * # Safety
 * `embedding` must be null or a live handle.
 */
size_t infcomp_embedding_dim(const struct InfcompEmbedding *embedding);

/**
 * Maximum-likelihood isotropic variance of the embedding.
 *
 * # Safety
 * `embedding` must be a live handle and `out_variance` writable.
 */
enum InfcompStatus infcomp_embedding_variance(const struct InfcompEmbedding *embedding,
                                              double *out_variance);

/**
 * Observed graph plus every pair with squared latent distance below
 * `range`.
 *
 * # Safety
 * Handles must be live and `out_graph` writable.
 */
enum InfcompStatus infcomp_recover(const struct InfcompGraph *graph,
                                   const struct InfcompEmbedding *embedding,
                                   double range,
                                   struct InfcompGraph **out_graph);

/**
 * `p(r, σ²)`, the probability that two users lie within squared distance
 * `range`.
 *
 * # Safety
 * `out_prob` must be writable.
 */
enum InfcompStatus infcomp_connect_probability(double range,
                                               double variance,
                                               size_t dim,
                                               double *out_prob);

/**
 * Predicted overload onset `capacity / p`.
 *
 * # Safety
 * `out_time` must be writable.
 */
enum InfcompStatus infcomp_overload_time(double capacity, double connect_prob, double *out_time);

/**
 * Mean-field counts at each of `len` increasing `times`, starting from
 * `(x1, x2)` at `t0 = x1 + x2`. A finite `onset` switches to the
 * overloaded regime there; pass NaN for none.
 *
 * # Safety
 * `times`, `out_x1` and `out_x2` must each hold `len` doubles.
 */
enum InfcompStatus infcomp_solve_mean_field(double a,
                                            double b,
                                            double x1,
                                            double x2,
                                            double onset,
                                            double decay,
                                            const double *times,
                                            size_t len,
                                            double *out_x1,
                                            double *out_x2);

/**
 * Fills `config` with two equal powers, seeds (16, 24), no overload,
 * decay 10, first-arrival strategy with exponential(1) arrivals.
 *
 * # Safety
 * `config` must be writable.
 */
enum InfcompStatus infcomp_sim_config_default(struct InfcompSimConfig *config);

/**
 * Runs one simulation and writes the counts after every step into
 * `out_x1`/`out_x2` (the first entry is the seeds). `out_len` receives the
 * number of steps recorded; when it exceeds `capacity` nothing else is
 * written and [`InfcompStatus::BufferTooSmall`] is returned. `out_trigger`
 * receives the overload onset, or -1 when overload never happened.
 *
 * # Safety
 * `graph` and `config` must be valid, `embedding` null or live, the output
 * arrays must hold `capacity` entries and the scalar outputs be writable.
 */
enum InfcompStatus infcomp_simulate(const struct InfcompGraph *graph,
                                    const struct InfcompEmbedding *embedding,
                                    const struct InfcompSimConfig *config,
                                    size_t *out_x1,
                                    size_t *out_x2,
                                    size_t capacity,
                                    size_t *out_len,
                                    int64_t *out_trigger);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFCOMP_H */
