#!/usr/bin/env node
/** Command-line entry: train a matcher, export crop embeddings for the
 * tracker, or probe a trained model on held-out data.
 */

import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { IdentityDataset } from "./dataset";
import { DESK_EPISODES, EpisodeConfig, validateEpisodeConfig } from "./episode";
import { identityScoreGap, tripletAccuracy } from "./eval";
import { DESK_MODEL, FineMatchModel, ModelConfig, validateModelConfig } from "./model";
import { mulberry32 } from "./rng";
import { writeScoreTable, PairScore } from "./scores";
import { l2Normalize, writeSidecar, SidecarRecord } from "./sidecar";
import { CropCache, DESK_TRAINING, trainInPlace } from "./train";

interface TrainFileConfig {
  episodes?: Partial<EpisodeConfig>;
  model?: Partial<ModelConfig>;
  learningRate?: number;
  seed?: number;
  categories?: string[];
}

function loadTrainConfig(file: string | undefined): TrainFileConfig {
  if (!file) return {};
  const raw = JSON.parse(fs.readFileSync(file, "utf-8"));
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error(`${file}: expected a JSON object`);
  }
  return raw as TrainFileConfig;
}

async function runTrain(args: { data: string; config?: string; out: string; seed?: number }) {
  const fileConfig = loadTrainConfig(args.config);
  const episodes: EpisodeConfig = { ...DESK_EPISODES, ...fileConfig.episodes };
  const model: ModelConfig = { ...DESK_MODEL, ...fileConfig.model };
  const learningRate = fileConfig.learningRate ?? DESK_TRAINING.learningRate;
  const seed = args.seed ?? fileConfig.seed ?? 0;
  validateEpisodeConfig(episodes);
  validateModelConfig(model);

  const dataset = IdentityDataset.load(args.data, fileConfig.categories);
  console.log(`dataset: ${dataset.records.length} identities across ` +
    `${dataset.categories.length} categories`);
  console.log(`episodes: C=${episodes.C} K=${episodes.K} Q=${episodes.Q} ` +
    `iterations=${episodes.iterations} lr=${learningRate} seed=${seed}`);

  const net = FineMatchModel.build(model);
  const losses = await trainInPlace(net, dataset, {
    episodes,
    model,
    learningRate,
    seed,
    onProgress: (iteration, loss) => {
      if (iteration % 100 === 0 || iteration === episodes.iterations) {
        console.log(`iter ${iteration}/${episodes.iterations} loss ${loss.toFixed(4)}`);
      }
    },
  });
  if (losses.length > 0) {
    console.log(`final loss ${losses[losses.length - 1].toFixed(4)}`);
  }
  await net.save(args.out);
  console.log(`model written to ${args.out}`);
  net.dispose();
}

const CROP_NAME = /^(\d+)_(\d+)\.png$/;

async function runExport(args: { model: string; crops: string; out: string;
                                 scoreTable?: string }) {
  const net = await FineMatchModel.load(args.model);
  const entries = fs.readdirSync(args.crops).sort();
  const crops: { frame: number; index: number; file: string }[] = [];
  for (const entry of entries) {
    const m = CROP_NAME.exec(entry);
    if (!m) continue;
    crops.push({
      frame: parseInt(m[1], 10),
      index: parseInt(m[2], 10),
      file: path.join(args.crops, entry),
    });
  }
  if (crops.length === 0) {
    throw new Error(`${args.crops}: no crops named <frame>_<index>.png`);
  }

  const cache = new CropCache(net.config.cropSize);
  const records: SidecarRecord[] = [];
  let dim = 0;
  try {
    for (const crop of crops) {
      const vector = await tf.tidy(() =>
        net.embedVectors(cache.stack([crop.file]))).data();
      dim = vector.length;
      records.push({ frame: crop.frame, index: crop.index,
                     vector: l2Normalize(Float32Array.from(vector)) });
    }
    writeSidecar(args.out, dim, records);
    console.log(`${records.length} embeddings (dim ${dim}) written to ${args.out}`);

    if (args.scoreTable) {
      const pairs: PairScore[] = [];
      for (let i = 0; i < crops.length; i++) {
        for (let j = i + 1; j < crops.length; j++) {
          const scores = tf.tidy(() => net.scoreMatrix(
            net.embed(cache.stack([crops[i].file])),
            net.embed(cache.stack([crops[j].file]))));
          const score = (await scores.data())[0];
          scores.dispose();
          pairs.push({
            frameA: crops[i].frame, detA: crops[i].index,
            frameB: crops[j].frame, detB: crops[j].index,
            score,
          });
        }
      }
      writeScoreTable(args.scoreTable, pairs);
      console.log(`${pairs.length} pair scores written to ${args.scoreTable}`);
    }
  } finally {
    cache.dispose();
    net.dispose();
  }
}

async function runEval(args: { model: string; data: string; holdout?: string;
                               seed: number; triples: number }) {
  const net = await FineMatchModel.load(args.model);
  let dataset = IdentityDataset.load(args.data);
  if (args.holdout) {
    if (!dataset.categories.includes(args.holdout)) {
      throw new Error(`holdout category ${args.holdout} not in ${args.data} ` +
        `(found: ${dataset.categories.join(", ")})`);
    }
    dataset = dataset.restrictedTo([args.holdout]);
  }
  const rng = mulberry32(args.seed);
  const gap = await identityScoreGap(net, dataset, rng);
  const accuracy = await tripletAccuracy(net, dataset, rng, args.triples);
  console.log(`match mean    ${gap.matchMean.toFixed(4)}`);
  console.log(`nonmatch mean ${gap.nonmatchMean.toFixed(4)}`);
  console.log(`score gap     ${gap.gap.toFixed(4)}`);
  console.log(`triplet acc   ${accuracy.toFixed(4)} (${args.triples} triples)`);
  net.dispose();
}

export async function main(argv: string[]): Promise<void> {
  await yargs(argv)
    .scriptName("finematch")
    .command(
      "train",
      "train an appearance matcher on an identity dataset",
      (y) => y
        .option("data", { type: "string", demandOption: true,
                          describe: "dataset root (category/identity/*.png)" })
        .option("config", { type: "string",
                            describe: "JSON file with episodes/model/learningRate/seed" })
        .option("out", { type: "string", demandOption: true,
                         describe: "output model file (JSON)" })
        .option("seed", { type: "number", describe: "override RNG seed" }),
      (a) => runTrain(a as any),
    )
    .command(
      "export",
      "embed detection crops and write a .treid sidecar",
      (y) => y
        .option("model", { type: "string", demandOption: true })
        .option("crops", { type: "string", demandOption: true,
                           describe: "directory of <frame>_<index>.png crops" })
        .option("out", { type: "string", demandOption: true,
                         describe: "output sidecar path" })
        .option("score-table", { type: "string",
                                 describe: "also write pairwise head scores as CSV" }),
      (a) => runExport(a as any),
    )
    .command(
      "eval",
      "measure score separation on held-out identities",
      (y) => y
        .option("model", { type: "string", demandOption: true })
        .option("data", { type: "string", demandOption: true })
        .option("holdout", { type: "string",
                             describe: "restrict to one category (e.g. an unseen one)" })
        .option("seed", { type: "number", default: 0 })
        .option("triples", { type: "number", default: 100 }),
      (a) => runEval(a as any),
    )
    .demandCommand(1, "pick a command: train, export, or eval")
    .strict()
    .fail((msg, err) => {
      console.error(err ? err.message : msg);
      process.exit(1);
    })
    .parseAsync();
}

if (require.main === module) {
  main(hideBin(process.argv)).catch((err) => {
    console.error(err instanceof Error ? err.message : String(err));
    process.exit(1);
  });
}
