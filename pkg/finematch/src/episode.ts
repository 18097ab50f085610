/** Episode sampling: C identities as classes, K support shots each, Q labeled
 * queries from the same identities, with support and query images disjoint.
 */

import { IdentityDataset, IdentityRecord, InsufficientData } from "./dataset";
import { Rng, randInt, sampleWithoutReplacement, shuffled } from "./rng";

export interface EpisodeConfig {
  /** Way count: classes per episode. */
  C: number;
  /** Shots: support images per class. */
  K: number;
  /** Query images per episode. */
  Q: number;
  iterations: number;
}

export const DESK_EPISODES: EpisodeConfig = { C: 2, K: 1, Q: 5, iterations: 5000 };

export function validateEpisodeConfig(cfg: EpisodeConfig): void {
  if (cfg.C < 2) throw new Error(`need at least 2 classes per episode, got C=${cfg.C}`);
  if (cfg.K < 1) throw new Error(`need at least 1 support shot, got K=${cfg.K}`);
  if (cfg.Q < 1) throw new Error(`need at least 1 query, got Q=${cfg.Q}`);
  if (cfg.iterations < 0) throw new Error(`iterations must be >= 0`);
}

export interface Episode {
  /** One entry per class: the identity and its K support images. */
  support: { record: IdentityRecord; files: string[] }[];
  /** Q labeled queries; classIndex points into `support`. */
  query: { file: string; classIndex: number }[];
}

export function sampleEpisode(dataset: IdentityDataset, cfg: EpisodeConfig, rng: Rng): Episode {
  validateEpisodeConfig(cfg);
  if (dataset.records.length < cfg.C) {
    throw new InsufficientData(
      `episode needs ${cfg.C} identities, dataset has ${dataset.records.length}`);
  }
  const chosen = sampleWithoutReplacement(rng, dataset.records, cfg.C);
  const support: Episode["support"] = [];
  const leftovers: { file: string; classIndex: number }[] = [];
  chosen.forEach((record, classIndex) => {
    if (record.files.length < cfg.K + 1) {
      throw new InsufficientData(
        `${record.key} has ${record.files.length} images; need ${cfg.K + 1} for K=${cfg.K}`);
    }
    const files = shuffled(rng, record.files);
    support.push({ record, files: files.slice(0, cfg.K) });
    for (const file of files.slice(cfg.K)) {
      leftovers.push({ file, classIndex });
    }
  });
  if (leftovers.length < cfg.Q) {
    throw new InsufficientData(
      `only ${leftovers.length} non-support images available for Q=${cfg.Q} queries`);
  }
  const query = shuffled(rng, leftovers).slice(0, cfg.Q);
  return { support, query };
}

/** The target matrix the episodic loss trains toward: 1 on the true class. */
export function indicatorTargets(episode: Episode): number[][] {
  return episode.query.map(q =>
    episode.support.map((_, c) => (q.classIndex === c ? 1 : 0)));
}
