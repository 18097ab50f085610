/** Episodic training: sample an episode, score every (query, class) pair,
 * regress the score matrix onto the match indicator with squared error, and
 * take an Adam step. Support classes are identities, never categories.
 */

import * as tf from "@tensorflow/tfjs";
import { IdentityDataset } from "./dataset";
import { DESK_EPISODES, EpisodeConfig, indicatorTargets, sampleEpisode,
         validateEpisodeConfig } from "./episode";
import { DESK_MODEL, FineMatchModel, ModelConfig } from "./model";
import { Image, readPng } from "./png";
import { Rng, mulberry32 } from "./rng";

export interface TrainOptions {
  episodes: EpisodeConfig;
  model: ModelConfig;
  learningRate: number;
  seed: number;
  onProgress?: (iteration: number, loss: number) => void;
}

export const DESK_TRAINING: TrainOptions = {
  episodes: DESK_EPISODES,
  model: DESK_MODEL,
  learningRate: 1e-4,
  seed: 0,
};

export interface TrainResult {
  model: FineMatchModel;
  /** One summed squared-error value per iteration. */
  losses: number[];
}

/** Decoded crops, resized once and kept as tensors for the whole run. */
export class CropCache {
  private cache = new Map<string, tf.Tensor3D>();

  constructor(readonly cropSize: number) {}

  get(file: string): tf.Tensor3D {
    let tensor = this.cache.get(file);
    if (!tensor) {
      // keep() pins the tensor past any enclosing tidy(); the cache owns its
      // lifetime until dispose().
      tensor = tf.keep(imageToCrop(readPng(file), this.cropSize));
      this.cache.set(file, tensor);
    }
    return tensor;
  }

  stack(files: string[]): tf.Tensor4D {
    return tf.stack(files.map(f => this.get(f))) as tf.Tensor4D;
  }

  dispose(): void {
    for (const tensor of this.cache.values()) tensor.dispose();
    this.cache.clear();
  }
}

export function imageToCrop(image: Image, cropSize: number): tf.Tensor3D {
  return tf.tidy(() => {
    const tensor = tf.tensor3d(image.rgb, [image.height, image.width, 3]);
    if (image.width === cropSize && image.height === cropSize) return tensor;
    return tf.image.resizeBilinear(tensor, [cropSize, cropSize]);
  });
}

export async function trainModel(dataset: IdentityDataset,
                                 options: TrainOptions): Promise<TrainResult> {
  validateEpisodeConfig(options.episodes);
  const model = FineMatchModel.build(options.model);
  const losses = await trainInPlace(model, dataset, options);
  return { model, losses };
}

/** Run the episode loop against an existing model; returns per-step losses. */
export async function trainInPlace(model: FineMatchModel, dataset: IdentityDataset,
                                   options: TrainOptions): Promise<number[]> {
  const rng: Rng = mulberry32(options.seed);
  const cache = new CropCache(options.model.cropSize);
  const optimizer = tf.train.adam(options.learningRate);
  const variables = [...model.embedding.trainableWeights,
                     ...model.association.trainableWeights]
    .map(w => w.read() as unknown as tf.Variable);
  const losses: number[] = [];
  const { C, K, Q } = options.episodes;

  try {
    for (let iteration = 0; iteration < options.episodes.iterations; iteration++) {
      const episode = sampleEpisode(dataset, options.episodes, rng);
      const supportCrops = cache.stack(episode.support.flatMap(s => s.files));
      const queryCrops = cache.stack(episode.query.map(q => q.file));
      const targets = tf.tensor2d(indicatorTargets(episode), [Q, C]);

      const costTensor = optimizer.minimize(() => {
        const supportFeats = model.embed(supportCrops, true);
        const [, h, w, ch] = supportFeats.shape;
        // Average the K shots of each class into one class feature map.
        const classFeats = supportFeats.reshape([C, K, h, w, ch])
          .mean(1) as tf.Tensor4D;
        const queryFeats = model.embed(queryCrops, true);
        const scores = model.scoreMatrix(queryFeats, classFeats, true);
        return tf.sum(tf.squaredDifference(scores, targets)) as tf.Scalar;
      }, true, variables);

      const loss = (await costTensor!.data())[0];
      losses.push(loss);
      options.onProgress?.(iteration, loss);
      tf.dispose([costTensor!, supportCrops, queryCrops, targets]);
    }
  } finally {
    cache.dispose();
    optimizer.dispose();
  }
  return losses;
}

/** Trailing mean of the loss curve, for coarse is-it-learning checks. */
export function movingAverage(losses: number[], window: number, at: number): number {
  const end = Math.min(at, losses.length);
  const start = Math.max(0, end - window);
  if (end <= start) throw new Error("empty loss window");
  let sum = 0;
  for (let i = start; i < end; i++) sum += losses[i];
  return sum / (end - start);
}
