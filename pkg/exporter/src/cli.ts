#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { ExporterError } from "./errors";
import { exportBundle } from "./export";

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .command("export", "export a slicekit bundle from a checkpoint", (y) =>
      y
        .option("manifest", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true })
        .option("disease", { type: "string", demandOption: true })
        .option("batch-size", { type: "number", default: 32 }),
    )
    .demandCommand(1)
    .strict()
    .parse();

  try {
    const result = await exportBundle({
      manifestPath: args.manifest as string,
      outDir: args.out as string,
      disease: args.disease as string,
      batchSize: args["batch-size"] as number,
    });
    console.error(
      `wrote ${result.nSamples} samples (dim ${result.embeddingDim}) to ${args.out}`,
    );
    return 0;
  } catch (err) {
    if (err instanceof ExporterError) {
      console.error(`error: ${err.name}: ${err.message}`);
      return 1;
    }
    console.error(`runtime error: ${(err as Error).message}`);
    return 2;
  }
}

if (require.main === module) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
