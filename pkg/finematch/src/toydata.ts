/** Toy identity datasets: colored shapes on noisy backgrounds.
 *
 * Categories are shapes ("circle", "square", "triangle"); identities within
 * a category are colors. Two crops match exactly when their colors match, so
 * the matching rule a model must learn transfers cleanly to a category it
 * never saw — the property the held-out evaluation probes.
 */

import * as fs from "fs";
import * as path from "path";
import { Image, writePng } from "./png";
import { Rng, mulberry32, normal } from "./rng";

export type Shape = "circle" | "square" | "triangle";

export interface ToyColor {
  name: string;
  rgb: [number, number, number];
}

export const TOY_COLORS: ToyColor[] = [
  { name: "red", rgb: [0.9, 0.15, 0.15] },
  { name: "green", rgb: [0.15, 0.85, 0.2] },
  { name: "blue", rgb: [0.2, 0.3, 0.95] },
  { name: "yellow", rgb: [0.9, 0.85, 0.1] },
  { name: "magenta", rgb: [0.85, 0.2, 0.8] },
  { name: "cyan", rgb: [0.15, 0.8, 0.85] },
];

export interface ToyDataConfig {
  root: string;
  size: number;
  categories: Shape[];
  /** Palette names from TOY_COLORS; unknown names are an error. */
  colors: string[];
  imagesPerIdentity: number;
  seed: number;
}

export function generateToyDataset(cfg: ToyDataConfig): void {
  if (cfg.imagesPerIdentity < 2) {
    throw new Error("each identity needs at least 2 images");
  }
  const palette = cfg.colors.map(name => {
    const color = TOY_COLORS.find(c => c.name === name);
    if (!color) {
      throw new Error(`unknown color ${name}; palette has ` +
        TOY_COLORS.map(c => c.name).join(", "));
    }
    return color;
  });
  const rng = mulberry32(cfg.seed);
  for (const shape of cfg.categories) {
    for (const color of palette) {
      const dir = path.join(cfg.root, shape, color.name);
      fs.mkdirSync(dir, { recursive: true });
      for (let i = 0; i < cfg.imagesPerIdentity; i++) {
        writePng(path.join(dir, `${String(i).padStart(3, "0")}.png`),
                 renderShape(cfg.size, shape, color.rgb, rng));
      }
    }
  }
}

export function renderShape(size: number, shape: Shape,
                            rgb: [number, number, number], rng: Rng): Image {
  const image: Image = { width: size, height: size, rgb: new Float32Array(size * size * 3) };
  const cx = size / 2 + (rng() - 0.5) * size * 0.15;
  const cy = size / 2 + (rng() - 0.5) * size * 0.15;
  const r = size * (0.28 + rng() * 0.08);
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const inside = insideShape(shape, x + 0.5 - cx, y + 0.5 - cy, r);
      for (let c = 0; c < 3; c++) {
        const base = inside ? rgb[c] : 0.12;
        const noisy = base + normal(rng) * (inside ? 0.05 : 0.03);
        image.rgb[(y * size + x) * 3 + c] = Math.max(0, Math.min(1, noisy));
      }
    }
  }
  return image;
}

function insideShape(shape: Shape, dx: number, dy: number, r: number): boolean {
  switch (shape) {
    case "circle":
      return dx * dx + dy * dy <= r * r;
    case "square":
      return Math.abs(dx) <= r && Math.abs(dy) <= r;
    case "triangle":
      // Upward-pointing: apex at the top, base at the bottom.
      return dy >= -r && dy <= r && Math.abs(dx) <= (dy + r) / 2;
  }
}
