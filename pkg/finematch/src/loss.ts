/** Episodic training objective: squared error between the Q x C score matrix
 * and the match indicator (1 for the query's own identity, 0 elsewhere),
 * summed over every (query, class) pair.
 */

export function indicatorMatrix(labels: number[], numClasses: number): number[][] {
  return labels.map(label => {
    if (!Number.isInteger(label) || label < 0 || label >= numClasses) {
      throw new Error(`label ${label} outside [0, ${numClasses})`);
    }
    return Array.from({ length: numClasses }, (_, c) => (c === label ? 1 : 0));
  });
}

export function episodeLoss(scores: number[][], labels: number[]): number {
  const targets = checkedTargets(scores, labels);
  let total = 0;
  for (let q = 0; q < scores.length; q++) {
    for (let c = 0; c < scores[q].length; c++) {
      const diff = scores[q][c] - targets[q][c];
      total += diff * diff;
    }
  }
  return total;
}

/** d(loss)/d(score): 2 * (score - indicator), entry by entry. */
export function episodeLossGradient(scores: number[][], labels: number[]): number[][] {
  const targets = checkedTargets(scores, labels);
  return scores.map((row, q) => row.map((s, c) => 2 * (s - targets[q][c])));
}

function checkedTargets(scores: number[][], labels: number[]): number[][] {
  if (scores.length !== labels.length) {
    throw new Error(`${scores.length} score rows for ${labels.length} labels`);
  }
  if (scores.length === 0) {
    throw new Error("empty score matrix");
  }
  const numClasses = scores[0].length;
  for (const row of scores) {
    if (row.length !== numClasses) {
      throw new Error("ragged score matrix");
    }
    for (const s of row) {
      if (!(s >= 0 && s <= 1)) {
        throw new Error(`score ${s} outside [0, 1]`);
      }
    }
  }
  return indicatorMatrix(labels, numClasses);
}
