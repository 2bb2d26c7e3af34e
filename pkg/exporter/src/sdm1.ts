/** SDM1 embedding container: "SDM1" magic, little-endian u32 N and u32 D,
 * N*D float32 values row-major, then N newline-terminated UTF-8 sample ids. */

const MAGIC = "SDM1";

export function encodeSdm1(rows: Float32Array[], sampleIds: string[]): Buffer {
  if (rows.length !== sampleIds.length) {
    throw new Error(
      `row count ${rows.length} != sample id count ${sampleIds.length}`,
    );
  }
  const n = rows.length;
  const d = n > 0 ? rows[0].length : 0;
  const header = Buffer.alloc(12);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt32LE(n, 4);
  header.writeUInt32LE(d, 8);

  const values = Buffer.alloc(n * d * 4);
  rows.forEach((row, i) => {
    if (row.length !== d) {
      throw new Error(`row ${i} has ${row.length} values, expected ${d}`);
    }
    row.forEach((v, j) => {
      if (!Number.isFinite(v)) {
        throw new Error(`non-finite value at row ${i}, column ${j}`);
      }
      values.writeFloatLE(v, (i * d + j) * 4);
    });
  });

  const ids = Buffer.from(sampleIds.map((s) => `${s}\n`).join(""), "utf8");
  return Buffer.concat([header, values, ids]);
}
