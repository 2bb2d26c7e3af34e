import * as fs from "fs";

import * as tf from "@tensorflow/tfjs";
import { PNG } from "pngjs";

import { ImageDecodeError } from "./errors";

/** Decode a PNG and resize it to the model's input height/width/channels,
 * scaled to [0, 1]. */
export function loadImage(
  file: string,
  height: number,
  width: number,
  channels: number,
): tf.Tensor3D {
  let png: PNG;
  try {
    png = PNG.sync.read(fs.readFileSync(file));
  } catch (err) {
    throw new ImageDecodeError(file, (err as Error).message);
  }
  return tf.tidy(() => {
    const rgba = tf.tensor3d(
      new Uint8Array(png.data),
      [png.height, png.width, 4],
      "int32",
    );
    let img: tf.Tensor3D;
    if (channels === 1) {
      // luminance from the RGB channels
      const rgb = rgba.slice([0, 0, 0], [-1, -1, 3]).toFloat();
      img = rgb
        .mul(tf.tensor1d([0.299, 0.587, 0.114]))
        .sum(2, true) as tf.Tensor3D;
    } else {
      img = rgba.slice([0, 0, 0], [-1, -1, channels]).toFloat();
    }
    return tf.image
      .resizeBilinear(img, [height, width])
      .div(255) as tf.Tensor3D;
  });
}
