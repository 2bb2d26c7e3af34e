export { exportBundle, ExportOptions, ExportResult } from "./export";
export { loadManifest, ExportManifest, ManifestImage } from "./manifest";
export { loadCheckpoint, saveCheckpoint } from "./checkpoint";
export { encodeSdm1 } from "./sdm1";
export { loadImage } from "./image";
export {
  ExporterError,
  CheckpointLoadError,
  LayerNotFound,
  ImageDecodeError,
  ManifestError,
} from "./errors";
