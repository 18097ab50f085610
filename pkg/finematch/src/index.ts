export { mulberry32, randInt, shuffled, sampleWithoutReplacement, normal } from "./rng";
export type { Rng } from "./rng";
export { readPng, writePng } from "./png";
export type { Image } from "./png";
export { IdentityDataset, InsufficientData } from "./dataset";
export type { IdentityRecord } from "./dataset";
export { DESK_EPISODES, validateEpisodeConfig, sampleEpisode, indicatorTargets } from "./episode";
export type { EpisodeConfig, Episode } from "./episode";
export { indicatorMatrix, episodeLoss, episodeLossGradient } from "./loss";
export { SIDECAR_MAGIC, HEADER_BYTES, DuplicateRecord, writeSidecar, readSidecar, l2Normalize } from "./sidecar";
export type { SidecarRecord } from "./sidecar";
export { writeScoreTable } from "./scores";
export type { PairScore } from "./scores";
export { DESK_MODEL, validateModelConfig, featureMapSize, FineMatchModel } from "./model";
export type { ModelConfig } from "./model";
export { DESK_TRAINING, CropCache, imageToCrop, trainModel, trainInPlace, movingAverage } from "./train";
export type { TrainOptions } from "./train";
export { TOY_COLORS, generateToyDataset } from "./toydata";
export type { Shape, ToyDataConfig } from "./toydata";
export { scorePair, identityScoreGap, tripletAccuracy } from "./eval";
export type { ScoreGap } from "./eval";
