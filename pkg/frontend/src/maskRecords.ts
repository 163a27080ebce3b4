import { maskToRle, Rle } from './rle.js'
import { SegmentedMask } from './segmenter.js'

/**
 * Mask record in the engine's JSON schema. The exporter fills geometry
 * and segmenter confidence; the semantic fields (label, label_id,
 * num_of_same_class, color) are left empty for the mapping engine to
 * assign during instance fusion.
 */
export interface MaskRecord {
  segmentation: Rle
  area: number
  bbox: [number, number, number, number]
  predicted_iou: number
  point_coords: [number, number][]
  stability_score: number
  crop_box: [number, number, number, number]
  label: string
  label_id: number
  num_of_same_class: number
  color: string
}

export function buildMaskRecord(
  segmented: SegmentedMask,
  height: number,
  width: number,
): MaskRecord {
  return {
    segmentation: maskToRle(segmented.mask, height, width),
    area: segmented.area,
    bbox: segmented.bbox,
    predicted_iou: segmented.predictedIou,
    point_coords: [segmented.pointCoords],
    stability_score: segmented.stabilityScore,
    crop_box: [0, 0, width, height],
    label: '',
    label_id: 0,
    num_of_same_class: 0,
    color: '',
  }
}
