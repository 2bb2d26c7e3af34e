import * as fs from "fs";
import * as path from "path";

import { ManifestError } from "./errors";

export interface ManifestImage {
  sample_id: string;
  patient_id: string;
  label: number;
  file: string;
  attributes?: Record<string, string>;
}

export interface ExportManifest {
  /** Path to the checkpoint's model.json, relative to the manifest file. */
  checkpoint: string;
  /** Name of the penultimate layer whose activations become the embedding. */
  layer: string;
  /** Output column names of the classifier head, in output order. */
  diseases: string[];
  /** Attribute vocabulary: attribute name -> allowed values. */
  attributes: Record<string, string[]>;
  images: ManifestImage[];
}

export function loadManifest(manifestPath: string): ExportManifest {
  let obj: any;
  try {
    obj = JSON.parse(fs.readFileSync(manifestPath, "utf8"));
  } catch (err) {
    throw new ManifestError(`cannot read manifest: ${(err as Error).message}`);
  }
  for (const key of ["checkpoint", "layer", "diseases", "images"]) {
    if (!(key in obj)) {
      throw new ManifestError(`manifest missing required key "${key}"`);
    }
  }
  if (!Array.isArray(obj.images) || obj.images.length === 0) {
    throw new ManifestError("manifest lists no images");
  }
  const seen = new Set<string>();
  for (const img of obj.images) {
    for (const key of ["sample_id", "patient_id", "label", "file"]) {
      if (!(key in img)) {
        throw new ManifestError(`image entry missing "${key}"`);
      }
    }
    if (img.label !== 0 && img.label !== 1) {
      throw new ManifestError(`image ${img.sample_id}: label must be 0 or 1`);
    }
    if (seen.has(img.sample_id)) {
      throw new ManifestError(`duplicate sample_id ${img.sample_id}`);
    }
    seen.add(img.sample_id);
  }
  return {
    checkpoint: obj.checkpoint,
    layer: obj.layer,
    diseases: obj.diseases,
    attributes: obj.attributes ?? {},
    images: obj.images,
  };
}

/** Resolve a manifest-relative path. */
export function resolveFrom(manifestPath: string, p: string): string {
  return path.isAbsolute(p) ? p : path.join(path.dirname(manifestPath), p);
}
