/**
 * Column-major run-length encoding of a binary mask: counts alternate
 * runs of 0s and 1s and always start with the 0-run (which may be
 * empty). Matches the engine's mask record serialization.
 */
export interface Rle {
  /** [height, width] */
  size: [number, number]
  counts: number[]
}

/** mask is row-major: mask[row * width + col] is truthy inside the region. */
export function maskToRle(mask: ArrayLike<number | boolean>, height: number, width: number): Rle {
  if (mask.length !== height * width) {
    throw new Error(`mask has ${mask.length} cells, expected ${height * width}`)
  }
  let counts: number[] = []
  let value = 0
  let run = 0
  for (let col = 0; col < width; col++) {
    for (let row = 0; row < height; row++) {
      let bit = mask[row * width + col] ? 1 : 0
      if (bit === value) {
        run++
      } else {
        counts.push(run)
        value = bit
        run = 1
      }
    }
  }
  if (run > 0 || counts.length === 0) {
    counts.push(run)
  }
  return { size: [height, width], counts }
}

export function rleToMask(rle: Rle): Uint8Array {
  let [height, width] = rle.size
  let total = rle.counts.reduce((a, b) => a + b, 0)
  if (total !== height * width) {
    throw new Error(`RLE counts sum to ${total}, expected ${height * width}`)
  }
  let mask = new Uint8Array(height * width)
  let pos = 0
  let value = 0
  for (let run of rle.counts) {
    if (value) {
      for (let i = 0; i < run; i++) {
        let flat = pos + i
        let col = Math.floor(flat / height)
        let row = flat % height
        mask[row * width + col] = 1
      }
    }
    pos += run
    value = 1 - value
  }
  return mask
}
