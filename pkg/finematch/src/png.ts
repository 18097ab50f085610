/** Thin synchronous PNG I/O around pngjs, in RGB float [0, 1] form. */

import * as fs from "fs";
import { PNG } from "pngjs";

export interface Image {
  width: number;
  height: number;
  /** Row-major RGB, length width * height * 3, values in [0, 1]. */
  rgb: Float32Array;
}

export function readPng(path: string): Image {
  const png = PNG.sync.read(fs.readFileSync(path));
  const rgb = new Float32Array(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    rgb[i * 3] = png.data[i * 4] / 255;
    rgb[i * 3 + 1] = png.data[i * 4 + 1] / 255;
    rgb[i * 3 + 2] = png.data[i * 4 + 2] / 255;
  }
  return { width: png.width, height: png.height, rgb };
}

export function writePng(path: string, image: Image): void {
  const png = new PNG({ width: image.width, height: image.height });
  for (let i = 0; i < image.width * image.height; i++) {
    for (let c = 0; c < 3; c++) {
      png.data[i * 4 + c] = Math.max(0, Math.min(255, Math.round(image.rgb[i * 3 + c] * 255)));
    }
    png.data[i * 4 + 3] = 255;
  }
  fs.writeFileSync(path, PNG.sync.write(png));
}
