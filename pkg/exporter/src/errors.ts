export class ExporterError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

export class CheckpointLoadError extends ExporterError {}

export class LayerNotFound extends ExporterError {}

export class ImageDecodeError extends ExporterError {
  readonly file: string;

  constructor(file: string, detail: string) {
    super(`${file}: ${detail}`);
    this.file = file;
  }
}

export class ManifestError extends ExporterError {}
