/**
 * Pluggable model contracts for the export tool, plus a deterministic
 * reference implementation used when no external model backend is wired
 * in. Any implementation satisfying the shapes may be substituted: the
 * pixel embedder and the text encoder must agree on `dim`, and the text
 * encoder must map a label that names a known palette color onto the
 * same unit vector the pixel embedder produces for that color.
 */

export interface PixelEmbedder {
  dim: number
  /** Unit-norm embedding for one RGB pixel. */
  embedPixel(r: number, g: number, b: number): Float32Array
}

export interface LabelTextEncoder {
  dim: number
  /** Unit-norm embedding for one label string. */
  encodeLabel(label: string): Float32Array
}

export interface EmbeddingModel {
  pixels: PixelEmbedder
  text: LabelTextEncoder
}

export interface HashedModelOptions {
  /** embedding width, e.g. 16 */
  dim: number
  /** label -> RGB; labels present here are encoded via their pixel color */
  palette?: Record<string, [number, number, number]>
}

function fnv1a(text: string): number {
  let hash = 0x811c9dc5
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i)
    hash = Math.imul(hash, 0x01000193)
  }
  return hash >>> 0
}

function mulberry32(seed: number): () => number {
  let state = seed >>> 0
  return () => {
    state = (state + 0x6d2b79f5) >>> 0
    let t = state
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

function unitVectorFromSeed(seed: number, dim: number): Float32Array {
  let rand = mulberry32(seed)
  let vector = new Float32Array(dim)
  let norm = 0
  while (norm === 0) {
    for (let i = 0; i < dim; i++) {
      // Box-Muller: a random direction needs gaussian components to be
      // uniform on the sphere.
      let u = Math.max(rand(), 1e-12)
      let v = rand()
      vector[i] = Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v)
      norm += vector[i] * vector[i]
    }
    norm = Math.sqrt(norm)
  }
  for (let i = 0; i < dim; i++) {
    vector[i] /= norm
  }
  return vector
}

/**
 * Deterministic stand-in model: every distinct RGB value and every label
 * string hashes to a fixed unit vector. Labels listed in the palette are
 * encoded through their color so that text queries land on the matching
 * pixels.
 */
export function createHashedModel(options: HashedModelOptions): EmbeddingModel {
  let { dim, palette = {} } = options
  if (!Number.isInteger(dim) || dim < 2) {
    throw new Error(`embedding dim must be an integer >= 2, got ${dim}`)
  }
  let cache = new Map<number, Float32Array>()
  let embedPixel = (r: number, g: number, b: number): Float32Array => {
    let key = (r << 16) | (g << 8) | b
    let hit = cache.get(key)
    if (!hit) {
      hit = unitVectorFromSeed(fnv1a(`rgb:${r},${g},${b}`), dim)
      cache.set(key, hit)
    }
    return hit
  }
  let encodeLabel = (label: string): Float32Array => {
    let rgb = palette[label]
    if (rgb) {
      return embedPixel(rgb[0], rgb[1], rgb[2])
    }
    return unitVectorFromSeed(fnv1a(`label:${label}`), dim)
  }
  return {
    pixels: { dim, embedPixel },
    text: { dim, encodeLabel },
  }
}
