/** Binary embedding sidecar files: the hand-off format the tracker ingests.
 *
 * Layout: 7-byte magic "TREID1\0", little-endian u32 embedding dimension,
 * then fixed-size records of u32 frame, u32 detection index, and dim
 * float32 components. One record per (frame, index); duplicates refused.
 */

import * as fs from "fs";

export const SIDECAR_MAGIC = "TREID1\0";
export const HEADER_BYTES = 11;

export class DuplicateRecord extends Error {}

export interface SidecarRecord {
  frame: number;
  index: number;
  vector: Float32Array;
}

export function writeSidecar(path: string, dim: number, records: SidecarRecord[]): void {
  if (dim < 1) throw new Error(`embedding dimension must be >= 1, got ${dim}`);
  const recordBytes = 8 + 4 * dim;
  const buffer = Buffer.alloc(HEADER_BYTES + records.length * recordBytes);
  buffer.write(SIDECAR_MAGIC, 0, "latin1");
  buffer.writeUInt32LE(dim, 7);
  const seen = new Set<string>();
  let offset = HEADER_BYTES;
  for (const { frame, index, vector } of records) {
    if (vector.length !== dim) {
      throw new Error(`vector for (${frame}, ${index}) has length ${vector.length}, expected ${dim}`);
    }
    const key = `${frame}:${index}`;
    if (seen.has(key)) {
      throw new DuplicateRecord(`duplicate record for frame ${frame} index ${index}`);
    }
    seen.add(key);
    buffer.writeUInt32LE(frame, offset);
    buffer.writeUInt32LE(index, offset + 4);
    for (let i = 0; i < dim; i++) {
      buffer.writeFloatLE(vector[i], offset + 8 + 4 * i);
    }
    offset += recordBytes;
  }
  fs.writeFileSync(path, buffer);
}

export function readSidecar(path: string): { dim: number; records: SidecarRecord[] } {
  const buffer = fs.readFileSync(path);
  if (buffer.length < HEADER_BYTES) {
    throw new Error(`${path}: truncated header`);
  }
  if (buffer.toString("latin1", 0, 7) !== SIDECAR_MAGIC) {
    throw new Error(`${path}: bad magic`);
  }
  const dim = buffer.readUInt32LE(7);
  const recordBytes = 8 + 4 * dim;
  const body = buffer.length - HEADER_BYTES;
  if (body % recordBytes !== 0) {
    throw new Error(`${path}: ${body} record bytes is not a multiple of ${recordBytes}`);
  }
  const records: SidecarRecord[] = [];
  const seen = new Set<string>();
  for (let offset = HEADER_BYTES; offset < buffer.length; offset += recordBytes) {
    const frame = buffer.readUInt32LE(offset);
    const index = buffer.readUInt32LE(offset + 4);
    const key = `${frame}:${index}`;
    if (seen.has(key)) {
      throw new DuplicateRecord(`${path}: duplicate record for frame ${frame} index ${index}`);
    }
    seen.add(key);
    const vector = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      vector[i] = buffer.readFloatLE(offset + 8 + 4 * i);
    }
    records.push({ frame, index, vector });
  }
  return { dim, records };
}

/** L2-normalize in float64, store back to float32; unit inputs pass through. */
export function l2Normalize(vector: Float32Array): Float32Array {
  let sum = 0;
  for (const v of vector) sum += v * v;
  const norm = Math.sqrt(sum);
  if (norm === 0 || !Number.isFinite(norm)) {
    throw new Error("cannot normalize a zero or non-finite vector");
  }
  if (Math.abs(norm - 1) <= 1e-6) {
    return vector;
  }
  const out = new Float32Array(vector.length);
  for (let i = 0; i < vector.length; i++) out[i] = vector[i] / norm;
  return out;
}
