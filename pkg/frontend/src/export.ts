import * as fs from 'node:fs'
import * as path from 'node:path'

import { buildMaskRecord } from './maskRecords.js'
import { readManifest } from './manifest.js'
import { createHashedModel, EmbeddingModel } from './model.js'
import { decodePng } from './png.js'
import { segmentByColor } from './segmenter.js'
import { Tensor, writeTensorFile } from './tensor.js'

/**
 * Job file schema. The tool reads the dataset manifest, runs the model
 * over every frame, and writes the engine's tensor and mask record file
 * formats into outputDir (typically the dataset directory itself, so the
 * manifest's embedding references stay valid).
 */
export interface ExportJob {
  /** path to the dataset manifest.json */
  manifest: string
  outputDir: string
  /** identifies the embedding model backend; 'hashed-v1' is built in */
  model?: string
  embedDim?: number
  /** label -> RGB used by the built-in model for color-grounded labels */
  palette?: Record<string, [number, number, number]>
  /** optional top-down raster to segment into mask records */
  bevImage?: string
  /** mask record output filename, relative to outputDir */
  maskOutput?: string
  minMaskArea?: number
  backgroundColors?: [number, number, number][]
}

export interface ExportReport {
  frameTensors: string[]
  labelTensors: string[]
  maskFile?: string
  maskCount: number
}

export function loadJob(jobPath: string): ExportJob {
  let raw = JSON.parse(fs.readFileSync(jobPath, 'utf8'))
  if (typeof raw?.manifest !== 'string' || typeof raw?.outputDir !== 'string') {
    throw new Error(`${jobPath}: job file needs string fields 'manifest' and 'outputDir'`)
  }
  // Paths in the job file are relative to the job file location.
  let base = path.dirname(path.resolve(jobPath))
  raw.manifest = path.resolve(base, raw.manifest)
  raw.outputDir = path.resolve(base, raw.outputDir)
  if (typeof raw.bevImage === 'string') {
    raw.bevImage = path.resolve(base, raw.bevImage)
  }
  return raw as ExportJob
}

function resolveModel(job: ExportJob): EmbeddingModel {
  let name = job.model ?? 'hashed-v1'
  if (name !== 'hashed-v1') {
    throw new Error(`unknown model backend '${name}' (built in: hashed-v1)`)
  }
  return createHashedModel({ dim: job.embedDim ?? 16, palette: job.palette })
}

function labelTensor(labels: string[], model: EmbeddingModel): Tensor {
  let dim = model.text.dim
  let data = new Float32Array(labels.length * dim)
  labels.forEach((label, i) => data.set(model.text.encodeLabel(label), i * dim))
  return { rows: labels.length, cols: 1, channels: dim, data }
}

export function runExport(job: ExportJob): ExportReport {
  let { root, manifest } = readManifest(job.manifest)
  let model = resolveModel(job)
  let dim = model.pixels.dim
  fs.mkdirSync(job.outputDir, { recursive: true })

  let frameTensors: string[] = []
  for (let frame of manifest.frames) {
    let image = decodePng(fs.readFileSync(path.join(root, frame.rgb)))
    let data = new Float32Array(image.width * image.height * dim)
    for (let i = 0; i < image.width * image.height; i++) {
      data.set(
        model.pixels.embedPixel(
          image.pixels[i * 3],
          image.pixels[i * 3 + 1],
          image.pixels[i * 3 + 2],
        ),
        i * dim,
      )
    }
    let out = path.join(job.outputDir, frame.embedding)
    writeTensorFile(out, { rows: image.height, cols: image.width, channels: dim, data })
    frameTensors.push(out)
  }

  let categoryOut = path.join(job.outputDir, manifest.category_embeddings)
  let colorOut = path.join(job.outputDir, manifest.color_embeddings)
  writeTensorFile(categoryOut, labelTensor(manifest.categories, model))
  writeTensorFile(colorOut, labelTensor(manifest.colors, model))

  let maskFile: string | undefined
  let maskCount = 0
  if (job.bevImage) {
    let bev = decodePng(fs.readFileSync(job.bevImage))
    let segmented = segmentByColor(bev, {
      minArea: job.minMaskArea,
      backgroundColors: job.backgroundColors,
    })
    let records = segmented.map(m => buildMaskRecord(m, bev.height, bev.width))
    maskFile = path.join(job.outputDir, job.maskOutput ?? 'masks.json')
    fs.writeFileSync(maskFile, JSON.stringify(records, null, 1))
    maskCount = records.length
  }

  return { frameTensors, labelTensors: [categoryOut, colorOut], maskFile, maskCount }
}
