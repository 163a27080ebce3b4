import { RgbImage } from './png.js'

/**
 * Stand-in promptable segmenter: proposes one mask per 4-connected
 * component of identical color in a top-down raster, skipping configured
 * background colors. Real segmenter backends satisfying the same output
 * shape may be substituted.
 */

export interface SegmenterOptions {
  /** colors that never form a mask (e.g. unobserved black, floor gray) */
  backgroundColors?: [number, number, number][]
  /** components smaller than this many cells are dropped */
  minArea?: number
}

export interface SegmentedMask {
  /** row-major binary mask over the full raster */
  mask: Uint8Array
  area: number
  /** [x, y, w, h] with x = leftmost column, y = topmost row */
  bbox: [number, number, number, number]
  /** one interior [col, row] seed point */
  pointCoords: [number, number]
  predictedIou: number
  /** fill ratio of the bounding box; 1.0 for solid rectangles */
  stabilityScore: number
}

export function segmentByColor(image: RgbImage, options: SegmenterOptions = {}): SegmentedMask[] {
  let { width, height, pixels } = image
  let backgroundColors = options.backgroundColors ?? [
    [0, 0, 0],
    [128, 128, 128],
  ]
  let minArea = options.minArea ?? 4
  let background = new Set(backgroundColors.map(([r, g, b]) => (r << 16) | (g << 8) | b))
  let colorAt = (index: number) =>
    (pixels[index * 3] << 16) | (pixels[index * 3 + 1] << 8) | pixels[index * 3 + 2]

  let visited = new Uint8Array(width * height)
  let masks: SegmentedMask[] = []
  let stack: number[] = []
  for (let start = 0; start < width * height; start++) {
    if (visited[start]) continue
    visited[start] = 1
    let color = colorAt(start)
    if (background.has(color)) continue

    let mask = new Uint8Array(width * height)
    let area = 0
    let minRow = height
    let maxRow = -1
    let minCol = width
    let maxCol = -1
    stack.push(start)
    mask[start] = 1
    while (stack.length > 0) {
      let index = stack.pop()!
      let row = Math.floor(index / width)
      let col = index % width
      area++
      if (row < minRow) minRow = row
      if (row > maxRow) maxRow = row
      if (col < minCol) minCol = col
      if (col > maxCol) maxCol = col
      let neighbors = [
        row > 0 ? index - width : -1,
        row < height - 1 ? index + width : -1,
        col > 0 ? index - 1 : -1,
        col < width - 1 ? index + 1 : -1,
      ]
      for (let next of neighbors) {
        if (next >= 0 && !visited[next] && colorAt(next) === color) {
          visited[next] = 1
          mask[next] = 1
          stack.push(next)
        }
      }
    }
    if (area < minArea) continue
    let bboxArea = (maxRow - minRow + 1) * (maxCol - minCol + 1)
    masks.push({
      mask,
      area,
      bbox: [minCol, minRow, maxCol - minCol + 1, maxRow - minRow + 1],
      pointCoords: [start % width, Math.floor(start / width)],
      predictedIou: 1.0,
      stabilityScore: area / bboxArea,
    })
  }
  return masks
}
