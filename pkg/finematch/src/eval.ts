/** Post-training probes: score separation on identity pairs and ranking
 * accuracy on (anchor, positive, negative) triples.
 */

import * as tf from "@tensorflow/tfjs";
import { IdentityDataset, InsufficientData } from "./dataset";
import { FineMatchModel } from "./model";
import { Rng, randInt, sampleWithoutReplacement } from "./rng";
import { CropCache } from "./train";

/** Score one (query, support) crop pair through embedding + head. */
export async function scorePair(model: FineMatchModel, cache: CropCache,
                                queryFile: string, supportFile: string): Promise<number> {
  const scores = tf.tidy(() => {
    const queryFeats = model.embed(cache.stack([queryFile]));
    const supportFeats = model.embed(cache.stack([supportFile]));
    return model.scoreMatrix(queryFeats, supportFeats);
  });
  const value = (await scores.data())[0];
  scores.dispose();
  return value;
}

export interface ScoreGap {
  matchMean: number;
  nonmatchMean: number;
  gap: number;
}

/**
 * Mean score over same-identity pairs minus mean over different-identity
 * pairs. Pairs are sampled fresh each call from the given dataset, so pass
 * held-out data to measure generalization.
 */
export async function identityScoreGap(model: FineMatchModel, dataset: IdentityDataset,
                                       rng: Rng, pairsPerSide = 50): Promise<ScoreGap> {
  if (dataset.records.length < 2) {
    throw new InsufficientData("score gap needs at least 2 identities");
  }
  const cache = new CropCache(model.config.cropSize);
  try {
    let matchSum = 0;
    for (let i = 0; i < pairsPerSide; i++) {
      const record = dataset.records[randInt(rng, dataset.records.length)];
      const [a, b] = sampleWithoutReplacement(rng, record.files, 2);
      matchSum += await scorePair(model, cache, a, b);
    }
    let nonmatchSum = 0;
    for (let i = 0; i < pairsPerSide; i++) {
      const [ra, rb] = sampleWithoutReplacement(rng, dataset.records, 2);
      nonmatchSum += await scorePair(model, cache,
        ra.files[randInt(rng, ra.files.length)],
        rb.files[randInt(rng, rb.files.length)]);
    }
    const matchMean = matchSum / pairsPerSide;
    const nonmatchMean = nonmatchSum / pairsPerSide;
    return { matchMean, nonmatchMean, gap: matchMean - nonmatchMean };
  } finally {
    cache.dispose();
  }
}

/**
 * Fraction of (anchor, positive, negative) triples where the same-identity
 * pair outscores the different-identity pair. Chance level is 0.5.
 */
export async function tripletAccuracy(model: FineMatchModel, dataset: IdentityDataset,
                                      rng: Rng, triples = 100): Promise<number> {
  if (dataset.records.length < 2) {
    throw new InsufficientData("triplet accuracy needs at least 2 identities");
  }
  const cache = new CropCache(model.config.cropSize);
  try {
    let correct = 0;
    for (let i = 0; i < triples; i++) {
      const [positive, negative] = sampleWithoutReplacement(rng, dataset.records, 2);
      const [anchor, same] = sampleWithoutReplacement(rng, positive.files, 2);
      const other = negative.files[randInt(rng, negative.files.length)];
      const matchScore = await scorePair(model, cache, anchor, same);
      const nonmatchScore = await scorePair(model, cache, anchor, other);
      if (matchScore > nonmatchScore) correct++;
    }
    return correct / triples;
  } finally {
    cache.dispose();
  }
}
