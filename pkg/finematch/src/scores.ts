/** Precomputed pair-score tables: `frame_a,det_a,frame_b,det_b,score` CSV
 * rows the tracker's precomputed similarity provider reads directly.
 */

import * as fs from "fs";

export interface PairScore {
  frameA: number;
  detA: number;
  frameB: number;
  detB: number;
  score: number;
}

export function writeScoreTable(path: string, pairs: PairScore[]): void {
  const lines = pairs.map(p => {
    if (!(p.score >= 0 && p.score <= 1)) {
      throw new Error(`score ${p.score} outside [0, 1]`);
    }
    // Keep each pair in a canonical order so the table stays symmetric.
    const a: [number, number] = [p.frameA, p.detA];
    const b: [number, number] = [p.frameB, p.detB];
    const [first, second] = a[0] < b[0] || (a[0] === b[0] && a[1] <= b[1]) ? [a, b] : [b, a];
    return `${first[0]},${first[1]},${second[0]},${second[1]},${p.score.toFixed(6)}`;
  });
  fs.writeFileSync(path, lines.sort().join("\n") + (lines.length ? "\n" : ""));
}
