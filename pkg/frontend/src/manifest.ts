import * as fs from 'node:fs'
import * as path from 'node:path'

/** Per-frame file references in a dataset manifest (paths relative to the dataset root). */
export interface FrameEntry {
  rgb: string
  depth: string
  embedding: string
}

/** Subset of the dataset manifest the export tool consumes. */
export interface DatasetManifest {
  categories: string[]
  colors: string[]
  category_embeddings: string
  color_embeddings: string
  frames: FrameEntry[]
}

export interface LoadedManifest {
  root: string
  manifest: DatasetManifest
}

function expectStringArray(value: unknown, name: string): string[] {
  if (!Array.isArray(value) || !value.every(v => typeof v === 'string')) {
    throw new Error(`manifest field ${name} must be an array of strings`)
  }
  return value
}

export function readManifest(manifestPath: string): LoadedManifest {
  let raw = JSON.parse(fs.readFileSync(manifestPath, 'utf8'))
  if (typeof raw !== 'object' || raw === null) {
    throw new Error(`${manifestPath}: manifest must be a JSON object`)
  }
  let categories = expectStringArray(raw.categories, 'categories')
  let colors = expectStringArray(raw.colors, 'colors')
  if (typeof raw.category_embeddings !== 'string' || typeof raw.color_embeddings !== 'string') {
    throw new Error(`${manifestPath}: manifest must name the label embedding files`)
  }
  if (!Array.isArray(raw.frames)) {
    throw new Error(`${manifestPath}: manifest field frames must be an array`)
  }
  let frames: FrameEntry[] = raw.frames.map((entry: any, i: number) => {
    for (let key of ['rgb', 'depth', 'embedding']) {
      if (typeof entry?.[key] !== 'string') {
        throw new Error(`${manifestPath}: frame ${i} missing file reference ${key}`)
      }
    }
    return { rgb: entry.rgb, depth: entry.depth, embedding: entry.embedding }
  })
  return {
    root: path.dirname(path.resolve(manifestPath)),
    manifest: {
      categories,
      colors,
      category_embeddings: raw.category_embeddings,
      color_embeddings: raw.color_embeddings,
      frames,
    },
  }
}
