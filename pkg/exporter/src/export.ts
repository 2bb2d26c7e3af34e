import * as fs from "fs";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";

import { loadCheckpoint } from "./checkpoint";
import { ImageDecodeError, LayerNotFound, ManifestError } from "./errors";
import { loadImage } from "./image";
import { ExportManifest, loadManifest, resolveFrom } from "./manifest";
import { encodeSdm1 } from "./sdm1";

export interface ExportOptions {
  manifestPath: string;
  outDir: string;
  disease: string;
  batchSize: number;
}

export interface ExportResult {
  nSamples: number;
  embeddingDim: number;
  files: { embeddings: string; metadata: string; schema: string };
}

function csvEscape(value: string): string {
  return /[",\n]/.test(value) ? `"${value.replace(/"/g, '""')}"` : value;
}

function writeMetadataCsv(
  file: string,
  manifest: ExportManifest,
  confidences: number[],
): void {
  const attrNames = Object.keys(manifest.attributes);
  const header = ["sample_id", "patient_id", "label", "confidence", ...attrNames];
  const lines = [header.join(",")];
  manifest.images.forEach((img, i) => {
    const row = [
      csvEscape(img.sample_id),
      csvEscape(img.patient_id),
      String(img.label),
      String(confidences[i]),
      ...attrNames.map((a) => csvEscape(img.attributes?.[a] ?? "unknown")),
    ];
    lines.push(row.join(","));
  });
  fs.writeFileSync(file, lines.join("\n") + "\n");
}

function writeSchemaJson(file: string, manifest: ExportManifest): void {
  const sorted: Record<string, string[]> = {};
  for (const key of Object.keys(manifest.attributes).sort()) {
    sorted[key] = manifest.attributes[key];
  }
  fs.writeFileSync(file, JSON.stringify(sorted, null, 2) + "\n");
}

/** Run the checkpoint over every manifest image and write a bundle
 * (embeddings.sdm1 + metadata.csv + schema.json) into outDir, preserving
 * manifest order. Inference is deterministic, so re-exports are
 * byte-identical. */
export async function exportBundle(
  options: ExportOptions,
): Promise<ExportResult> {
  const manifest = loadManifest(options.manifestPath);
  const diseaseIndex = manifest.diseases.indexOf(options.disease);
  if (diseaseIndex < 0) {
    throw new ManifestError(
      `disease "${options.disease}" not in manifest diseases ` +
        `[${manifest.diseases.join(", ")}]`,
    );
  }
  if (options.batchSize < 1) {
    throw new ManifestError("batch size must be >= 1");
  }

  const model = await loadCheckpoint(
    resolveFrom(options.manifestPath, manifest.checkpoint),
  );
  let layer: tf.layers.Layer;
  try {
    layer = model.getLayer(manifest.layer);
  } catch {
    throw new LayerNotFound(
      `layer "${manifest.layer}" not found in checkpoint; layers: ` +
        model.layers.map((l) => l.name).join(", "),
    );
  }
  const extractor = tf.model({
    inputs: model.inputs,
    outputs: [layer.output as tf.SymbolicTensor, model.outputs[0]],
  });

  const inputShape = model.inputs[0].shape; // [null, h, w, c]
  const [height, width, channels] = inputShape.slice(1) as number[];

  // decode everything first so per-file errors are collected before any
  // inference or output happens
  const decodeErrors: ImageDecodeError[] = [];
  const images: tf.Tensor3D[] = [];
  for (const img of manifest.images) {
    try {
      images.push(
        loadImage(
          resolveFrom(options.manifestPath, img.file),
          height,
          width,
          channels,
        ),
      );
    } catch (err) {
      if (err instanceof ImageDecodeError) {
        decodeErrors.push(err);
      } else {
        throw err;
      }
    }
  }
  if (decodeErrors.length > 0) {
    images.forEach((t) => t.dispose());
    throw new ImageDecodeError(
      `${decodeErrors.length} file(s)`,
      decodeErrors.map((e) => e.message).join("; "),
    );
  }

  const rows: Float32Array[] = [];
  const confidences: number[] = [];
  for (let start = 0; start < images.length; start += options.batchSize) {
    const batch = images.slice(start, start + options.batchSize);
    const [embTensor, predTensor] = tf.tidy(() => {
      const stacked = tf.stack(batch);
      const [emb, pred] = extractor.predict(stacked) as tf.Tensor[];
      return [emb.reshape([batch.length, -1]), pred.reshape([batch.length, -1])];
    });
    const emb = (await embTensor.array()) as number[][];
    const pred = (await predTensor.array()) as number[][];
    embTensor.dispose();
    predTensor.dispose();
    emb.forEach((row, i) => {
      rows.push(Float32Array.from(row));
      const conf = pred[i][diseaseIndex];
      if (!(conf >= 0 && conf <= 1)) {
        throw new ManifestError(
          `confidence ${conf} out of [0, 1] for sample ` +
            manifest.images[start + i].sample_id +
            "; is the head's final activation a probability?",
        );
      }
      confidences.push(conf);
    });
  }
  images.forEach((t) => t.dispose());

  fs.mkdirSync(options.outDir, { recursive: true });
  const files = {
    embeddings: path.join(options.outDir, "embeddings.sdm1"),
    metadata: path.join(options.outDir, "metadata.csv"),
    schema: path.join(options.outDir, "schema.json"),
  };
  fs.writeFileSync(
    files.embeddings,
    encodeSdm1(rows, manifest.images.map((img) => img.sample_id)),
  );
  writeMetadataCsv(files.metadata, manifest, confidences);
  writeSchemaJson(files.schema, manifest);
  return { nSamples: rows.length, embeddingDim: rows[0]?.length ?? 0, files };
}
