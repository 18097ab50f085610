/** The two-part matching network.
 *
 * `embedding` turns an RGB crop into a feature map; `association` takes the
 * channel-concatenated feature maps of a (query, support) pair and emits a
 * match score in [0, 1] through a sigmoid. Scoring is therefore pairwise:
 * the head sees both crops at once rather than comparing fixed vectors.
 *
 * All layer initializers are seeded, so a (config, data, seed) triple always
 * trains to the same weights.
 */

import * as fs from "fs";
import * as tf from "@tensorflow/tfjs";

export interface ModelConfig {
  /** Square crop edge fed to the embedding net. */
  cropSize: number;
  /** Embedding channels; also the exported vector dimension. */
  channels: number;
  /** Residual blocks; each halves the spatial size. */
  blocks: number;
  /** Channels of the association head's first conv. */
  headChannels: number;
  /** Channels of the head's two pooled conv blocks. */
  headBlockChannels: number;
  /** Width of the head's hidden linear layer. */
  headHidden: number;
  seed: number;
}

export const DESK_MODEL: ModelConfig = {
  cropSize: 84,
  channels: 64,
  blocks: 4,
  headChannels: 128,
  headBlockChannels: 64,
  headHidden: 64,
  seed: 0,
};

/** Spatial edge of the embedding output; the head pools it twice more. */
export function featureMapSize(cfg: ModelConfig): number {
  let size = cfg.cropSize;
  for (let i = 0; i < cfg.blocks; i++) size = Math.floor(size / 2);
  return size;
}

export function validateModelConfig(cfg: ModelConfig): void {
  if (cfg.cropSize < 4) throw new Error(`cropSize ${cfg.cropSize} too small`);
  if (cfg.blocks < 1) throw new Error("need at least one residual block");
  if (featureMapSize(cfg) < 4) {
    throw new Error(
      `cropSize ${cfg.cropSize} with ${cfg.blocks} blocks leaves a ` +
      `${featureMapSize(cfg)}px feature map; the head needs at least 4px`);
  }
}

export class FineMatchModel {
  private constructor(
    readonly config: ModelConfig,
    readonly embedding: tf.LayersModel,
    readonly association: tf.LayersModel,
  ) {}

  static build(config: ModelConfig): FineMatchModel {
    validateModelConfig(config);
    let seed = config.seed;
    const init = () => tf.initializers.glorotUniform({ seed: seed++ });

    const conv = (x: tf.SymbolicTensor, filters: number): tf.SymbolicTensor => {
      const y = tf.layers.conv2d({
        filters, kernelSize: 3, padding: "same", kernelInitializer: init(),
      }).apply(x) as tf.SymbolicTensor;
      return tf.layers.batchNormalization({}).apply(y) as tf.SymbolicTensor;
    };
    const relu = (x: tf.SymbolicTensor) =>
      tf.layers.reLU().apply(x) as tf.SymbolicTensor;
    const pool = (x: tf.SymbolicTensor) =>
      tf.layers.maxPooling2d({ poolSize: 2 }).apply(x) as tf.SymbolicTensor;

    // Embedding: conv stem, then residual blocks that each downsample.
    const crop = tf.input({ shape: [config.cropSize, config.cropSize, 3] });
    let x = relu(conv(crop, config.channels));
    for (let b = 0; b < config.blocks; b++) {
      const inner = conv(relu(conv(x, config.channels)), config.channels);
      x = pool(relu(tf.layers.add().apply([x, inner]) as tf.SymbolicTensor));
    }
    const embedding = tf.model({ inputs: crop, outputs: x, name: "embedding" });

    // Association head over a concatenated feature-map pair.
    const size = featureMapSize(config);
    const pair = tf.input({ shape: [size, size, 2 * config.channels] });
    let y = relu(conv(pair, config.headChannels));
    for (let b = 0; b < 2; b++) {
      y = pool(relu(conv(y, config.headBlockChannels)));
    }
    let flat = tf.layers.flatten().apply(y) as tf.SymbolicTensor;
    flat = tf.layers.dense({
      units: config.headHidden, activation: "relu", kernelInitializer: init(),
    }).apply(flat) as tf.SymbolicTensor;
    const score = tf.layers.dense({
      units: 1, activation: "sigmoid", kernelInitializer: init(),
    }).apply(flat) as tf.SymbolicTensor;
    const association = tf.model({ inputs: pair, outputs: score, name: "association" });

    return new FineMatchModel(config, embedding, association);
  }

  /** Feature maps for a batch of crops: [N, s, s, channels]. */
  embed(crops: tf.Tensor4D, training = false): tf.Tensor4D {
    return this.embedding.apply(crops, { training }) as tf.Tensor4D;
  }

  /**
   * Score matrix for every (query, support) pair: [Q, C] in [0, 1].
   * Inputs are feature maps from `embed`.
   */
  scoreMatrix(queryFeats: tf.Tensor4D, supportFeats: tf.Tensor4D,
              training = false): tf.Tensor2D {
    return tf.tidy(() => {
      const [q] = queryFeats.shape;
      const [c, h, w, ch] = supportFeats.shape;
      // Pair every query with every support class. Tiling is done on rank-2
      // views because the tile gradient only exists up to rank 4.
      const queries = queryFeats.reshape([q, h * w * ch]).tile([1, c])
        .reshape([q * c, h, w, ch]);
      const supports = supportFeats.reshape([1, c * h * w * ch]).tile([q, 1])
        .reshape([q * c, h, w, ch]);
      const pairs = tf.concat([queries, supports], 3);
      const scores = this.association.apply(pairs, { training }) as tf.Tensor2D;
      return scores.reshape([q, c]);
    });
  }

  /** Pooled, unit-norm embedding vectors: [N, channels]. Used for export. */
  embedVectors(crops: tf.Tensor4D): tf.Tensor2D {
    return tf.tidy(() => {
      const feats = this.embed(crops);
      const pooled = feats.mean([1, 2]) as tf.Tensor2D;
      const norms = pooled.norm("euclidean", 1, true);
      return pooled.div(norms.maximum(1e-12)) as tf.Tensor2D;
    });
  }

  get trainableWeights(): tf.Variable[] {
    return [...this.embedding.trainableWeights, ...this.association.trainableWeights]
      .map(w => w.read() as unknown as tf.Variable);
  }

  async save(path: string): Promise<void> {
    const dump = async (model: tf.LayersModel) => {
      let captured: tf.io.ModelArtifacts | null = null;
      await model.save(tf.io.withSaveHandler(async artifacts => {
        captured = artifacts;
        return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: "JSON" } };
      }), { includeOptimizer: false });
      const artifacts = captured as unknown as tf.io.ModelArtifacts;
      const weightData = joinBuffers(artifacts.weightData!);
      return {
        modelTopology: artifacts.modelTopology,
        weightSpecs: artifacts.weightSpecs,
        weightData: Buffer.from(weightData).toString("base64"),
      };
    };
    const payload = {
      format: "finematch-model",
      version: 1,
      config: this.config,
      embedding: await dump(this.embedding),
      association: await dump(this.association),
    };
    fs.writeFileSync(path, JSON.stringify(payload));
  }

  static async load(path: string): Promise<FineMatchModel> {
    const payload = JSON.parse(fs.readFileSync(path, "utf8"));
    if (payload.format !== "finematch-model") {
      throw new Error(`${path}: not a finematch model file`);
    }
    const restore = (saved: any) => tf.loadLayersModel(tf.io.fromMemory({
      modelTopology: saved.modelTopology,
      weightSpecs: saved.weightSpecs,
      weightData: bufferToArrayBuffer(Buffer.from(saved.weightData, "base64")),
    }));
    return new FineMatchModel(
      payload.config,
      await restore(payload.embedding),
      await restore(payload.association),
    );
  }

  dispose(): void {
    this.embedding.dispose();
    this.association.dispose();
  }
}

function joinBuffers(data: ArrayBuffer | ArrayBuffer[]): ArrayBuffer {
  if (!Array.isArray(data)) return data;
  const total = data.reduce((n, b) => n + b.byteLength, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const part of data) {
    out.set(new Uint8Array(part), offset);
    offset += part.byteLength;
  }
  return out.buffer;
}

function bufferToArrayBuffer(buffer: Buffer): ArrayBuffer {
  const out = new ArrayBuffer(buffer.byteLength);
  new Uint8Array(out).set(buffer);
  return out;
}
