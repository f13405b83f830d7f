/* ufema.h - C interface to the ufema robust speaker-verification pipeline.
 *
 * Copyright 2026  The ufema authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *  http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef UFEMA_UFEMA_H_
#define UFEMA_UFEMA_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns UFEMA_OK on success; on failure ufema_last_error()
 * describes the problem (thread-local, valid until the next failing call). */
typedef enum ufema_status {
  UFEMA_OK = 0,
  UFEMA_ERR_INVALID_ARGUMENT = 1,
  UFEMA_ERR_DEGENERATE_INPUT = 2,
  UFEMA_ERR_IO = 3,
  UFEMA_ERR_FORMAT = 4,
  UFEMA_ERR_TRAINING = 5,
  UFEMA_ERR_CORRUPTION = 6,
  UFEMA_ERR_POOL = 7,
  UFEMA_ERR_INTERNAL = 8
} ufema_status;

/* Opaque experiment configuration handle. */
typedef struct ufema_config ufema_config;

const char* ufema_version(void);
const char* ufema_last_error(void);

/* Configuration lifecycle. ufema_config_create yields all defaults;
 * ufema_config_load parses a flat `key = value` file (unknown keys fail). */
ufema_status ufema_config_create(ufema_config** out);
ufema_status ufema_config_load(const char* path, ufema_config** out);
ufema_status ufema_config_set(ufema_config* cfg, const char* key, const char* value);
ufema_status ufema_config_get(const ufema_config* cfg, const char* key,
                              char* value_out, size_t value_cap);
ufema_status ufema_config_save(const ufema_config* cfg, const char* path);
void ufema_config_free(ufema_config* cfg);

/* Pipeline stages. Outputs land under the config's data/run directories. */
ufema_status ufema_synth_corpus(const ufema_config* cfg);
ufema_status ufema_train_enhancers(const ufema_config* cfg);
ufema_status ufema_pretrain_encoder(const ufema_config* cfg);

/* Joint training. arm may be NULL/"" for the plain config or one of the
 * named ablation arms (comma list from ufema_ablation_arms). max_steps < 0
 * runs to completion; otherwise at most that many further optimizer steps
 * run, resuming from an existing checkpoint. The checkpoint path is written
 * to ckpt_out when non-NULL. */
ufema_status ufema_train(const ufema_config* cfg, const char* arm,
                         int64_t max_steps, char* ckpt_out, size_t ckpt_cap);

ufema_status ufema_ablation_arms(char* arms_out, size_t arms_cap);

/* conditions is a comma-separated list of descriptors such as
 * "clean,babble@-5,music@0". Results go to out_csv. */
ufema_status ufema_evaluate(const ufema_config* cfg, const char* checkpoint,
                            const char* manifest, const char* trials,
                            const char* conditions, const char* out_csv);

/* Fixed-weight interpolation baseline; weights is a comma list in [0,1].
 * out_svg may be NULL to skip the plot. */
ufema_status ufema_sweep_interp(const ufema_config* cfg, const char* checkpoint,
                                const char* manifest, const char* trials,
                                const char* conditions, const char* weights,
                                const char* out_csv, const char* out_svg);

/* Trains and evaluates each named arm; one CSV row per (arm, condition). */
ufema_status ufema_ablate(const ufema_config* cfg, const char* arms,
                          const char* manifest, const char* trials,
                          const char* conditions, const char* out_csv);

/* Equal error rate of scored trials (labels: 1 target, 0 nontarget). */
ufema_status ufema_compute_eer(const double* scores, const int32_t* labels,
                               size_t n, double* eer_out);

#ifdef __cplusplus
}
#endif

#endif /* UFEMA_UFEMA_H_ */
