import * as fs from 'node:fs'

export const TENSOR_MAGIC = 'BEVT'
export const TENSOR_VERSION = 1

/** e.g. 80 x 80 x 16 float32, row-major */
export interface Tensor {
  rows: number
  cols: number
  channels: number
  data: Float32Array
}

/**
 * Serialize a tensor to the engine's flat binary layout: 4-byte magic,
 * then version/rows/cols/channels as little-endian uint32, then the
 * float32 payload in row-major order.
 */
export function encodeTensor(tensor: Tensor): Buffer {
  let { rows, cols, channels, data } = tensor
  if (data.length !== rows * cols * channels) {
    throw new Error(
      `tensor data has ${data.length} values, expected ${rows * cols * channels}`,
    )
  }
  let header = Buffer.alloc(20)
  header.write(TENSOR_MAGIC, 0, 'ascii')
  header.writeUInt32LE(TENSOR_VERSION, 4)
  header.writeUInt32LE(rows, 8)
  header.writeUInt32LE(cols, 12)
  header.writeUInt32LE(channels, 16)
  let payload = Buffer.alloc(data.length * 4)
  for (let i = 0; i < data.length; i++) {
    payload.writeFloatLE(data[i], i * 4)
  }
  return Buffer.concat([header, payload])
}

export function decodeTensor(buffer: Buffer): Tensor {
  if (buffer.toString('ascii', 0, 4) !== TENSOR_MAGIC) {
    throw new Error('not an embedding tensor file (bad magic)')
  }
  let version = buffer.readUInt32LE(4)
  if (version !== TENSOR_VERSION) {
    throw new Error(`unsupported tensor version ${version}`)
  }
  let rows = buffer.readUInt32LE(8)
  let cols = buffer.readUInt32LE(12)
  let channels = buffer.readUInt32LE(16)
  let expected = rows * cols * channels
  if (buffer.length !== 20 + expected * 4) {
    throw new Error(`truncated tensor: ${buffer.length - 20} payload bytes, expected ${expected * 4}`)
  }
  let data = new Float32Array(expected)
  for (let i = 0; i < expected; i++) {
    data[i] = buffer.readFloatLE(20 + i * 4)
  }
  return { rows, cols, channels, data }
}

export function writeTensorFile(path: string, tensor: Tensor): void {
  fs.writeFileSync(path, encodeTensor(tensor))
}

export function readTensorFile(path: string): Tensor {
  return decodeTensor(fs.readFileSync(path))
}
