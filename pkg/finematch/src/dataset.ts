/** Identity-labeled image collections laid out as `category/identity/*.png`.
 *
 * The unit of supervision is the identity, not the category: two crops count
 * as a match only when they come from the same identity folder.
 */

import * as fs from "fs";
import * as path from "path";

export class InsufficientData extends Error {}

export interface IdentityRecord {
  category: string;
  identity: string;
  /** "category/identity" — unique across the dataset. */
  key: string;
  files: string[];
}

export class IdentityDataset {
  constructor(
    readonly root: string,
    readonly records: IdentityRecord[],
  ) {}

  /**
   * Scan a dataset root. Every identity must bring at least two images —
   * one image can never form a (support, query) pair.
   */
  static load(root: string, categories?: string[]): IdentityDataset {
    if (!fs.existsSync(root)) {
      throw new Error(`dataset root ${root} does not exist`);
    }
    const wanted = categories ? new Set(categories) : null;
    const records: IdentityRecord[] = [];
    for (const category of fs.readdirSync(root).sort()) {
      const categoryDir = path.join(root, category);
      if (!fs.statSync(categoryDir).isDirectory()) continue;
      if (wanted && !wanted.has(category)) continue;
      for (const identity of fs.readdirSync(categoryDir).sort()) {
        const identityDir = path.join(categoryDir, identity);
        if (!fs.statSync(identityDir).isDirectory()) continue;
        const files = fs.readdirSync(identityDir).sort()
          .filter(f => f.toLowerCase().endsWith(".png"))
          .map(f => path.join(identityDir, f));
        if (files.length < 2) {
          throw new InsufficientData(
            `${category}/${identity} has ${files.length} image(s); need at least 2`);
        }
        records.push({ category, identity, key: `${category}/${identity}`, files });
      }
    }
    if (records.length === 0) {
      throw new InsufficientData(`no identities found under ${root}`);
    }
    return new IdentityDataset(root, records);
  }

  get categories(): string[] {
    return [...new Set(this.records.map(r => r.category))].sort();
  }

  byCategory(category: string): IdentityRecord[] {
    const records = this.records.filter(r => r.category === category);
    if (records.length === 0) {
      throw new InsufficientData(`no identities in category ${category}`);
    }
    return records;
  }

  /** A new dataset restricted to the given categories. */
  restrictedTo(categories: string[]): IdentityDataset {
    const wanted = new Set(categories);
    const records = this.records.filter(r => wanted.has(r.category));
    if (records.length === 0) {
      throw new InsufficientData(`no identities in categories ${categories.join(", ")}`);
    }
    return new IdentityDataset(this.root, records);
  }
}
