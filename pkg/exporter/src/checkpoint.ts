import * as fs from "fs";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";

import { CheckpointLoadError } from "./errors";

/** Load a layers-model checkpoint (model.json + weight shards) from disk.
 * Plain-filesystem replacement for the tfjs-node file:// handler. */
export async function loadCheckpoint(
  modelJsonPath: string,
): Promise<tf.LayersModel> {
  let artifacts: tf.io.ModelArtifacts;
  try {
    const dir = path.dirname(modelJsonPath);
    const modelJson = JSON.parse(fs.readFileSync(modelJsonPath, "utf8"));
    const groups: any[] = modelJson.weightsManifest ?? [];
    const weightSpecs = groups.flatMap((g) => g.weights);
    const shards = groups.flatMap((g: any) =>
      g.paths.map((p: string) => fs.readFileSync(path.join(dir, p))),
    );
    const weightData = Buffer.concat(shards);
    artifacts = {
      modelTopology: modelJson.modelTopology,
      weightSpecs,
      weightData: weightData.buffer.slice(
        weightData.byteOffset,
        weightData.byteOffset + weightData.byteLength,
      ),
    };
  } catch (err) {
    throw new CheckpointLoadError(
      `cannot read checkpoint ${modelJsonPath}: ${(err as Error).message}`,
    );
  }
  try {
    return await tf.loadLayersModel(tf.io.fromMemory(artifacts));
  } catch (err) {
    throw new CheckpointLoadError(
      `cannot build model from ${modelJsonPath}: ${(err as Error).message}`,
    );
  }
}

/** Save a layers model as model.json + weights.bin under dir (test helper
 * and the write-side counterpart of loadCheckpoint). */
export async function saveCheckpoint(
  model: tf.LayersModel,
  dir: string,
): Promise<string> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = artifacts.weightData as ArrayBuffer;
      fs.writeFileSync(path.join(dir, "weights.bin"), Buffer.from(weightData));
      const modelJson = {
        modelTopology: artifacts.modelTopology,
        weightsManifest: [
          { paths: ["weights.bin"], weights: artifacts.weightSpecs },
        ],
      };
      fs.writeFileSync(
        path.join(dir, "model.json"),
        JSON.stringify(modelJson),
      );
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: "JSON" } };
    }),
  );
  return path.join(dir, "model.json");
}
