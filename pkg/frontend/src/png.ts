import * as zlib from 'node:zlib'

/** Row-major 8-bit RGB raster. pixels.length == width * height * 3 */
export interface RgbImage {
  width: number
  height: number
  pixels: Uint8Array
}

const PNG_SIGNATURE = Buffer.from([137, 80, 78, 71, 13, 10, 26, 10])

let crcTable: Uint32Array | undefined

function crc32(buffer: Buffer): number {
  if (!crcTable) {
    crcTable = new Uint32Array(256)
    for (let n = 0; n < 256; n++) {
      let c = n
      for (let k = 0; k < 8; k++) {
        c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1
      }
      crcTable[n] = c >>> 0
    }
  }
  let crc = 0xffffffff
  for (let i = 0; i < buffer.length; i++) {
    crc = crcTable[(crc ^ buffer[i]) & 0xff] ^ (crc >>> 8)
  }
  return (crc ^ 0xffffffff) >>> 0
}

function chunk(type: string, data: Buffer): Buffer {
  let head = Buffer.alloc(8)
  head.writeUInt32BE(data.length, 0)
  head.write(type, 4, 'ascii')
  let crc = Buffer.alloc(4)
  crc.writeUInt32BE(crc32(Buffer.concat([head.subarray(4), data])), 0)
  return Buffer.concat([head, data, crc])
}

/** Encode a non-interlaced 8-bit truecolor PNG (filter type 0 on every row). */
export function encodePng(image: RgbImage): Buffer {
  let { width, height, pixels } = image
  if (pixels.length !== width * height * 3) {
    throw new Error(`pixel buffer has ${pixels.length} bytes, expected ${width * height * 3}`)
  }
  let ihdr = Buffer.alloc(13)
  ihdr.writeUInt32BE(width, 0)
  ihdr.writeUInt32BE(height, 4)
  ihdr[8] = 8 // bit depth
  ihdr[9] = 2 // color type: truecolor
  let raw = Buffer.alloc(height * (1 + width * 3))
  for (let row = 0; row < height; row++) {
    let offset = row * (1 + width * 3)
    raw[offset] = 0 // filter: none
    raw.set(pixels.subarray(row * width * 3, (row + 1) * width * 3), offset + 1)
  }
  return Buffer.concat([
    PNG_SIGNATURE,
    chunk('IHDR', ihdr),
    chunk('IDAT', zlib.deflateSync(raw)),
    chunk('IEND', Buffer.alloc(0)),
  ])
}

function paeth(a: number, b: number, c: number): number {
  let p = a + b - c
  let pa = Math.abs(p - a)
  let pb = Math.abs(p - b)
  let pc = Math.abs(p - c)
  if (pa <= pb && pa <= pc) return a
  if (pb <= pc) return b
  return c
}

/**
 * Decode a non-interlaced 8-bit PNG in truecolor or truecolor-with-alpha
 * (the variants written by common imaging libraries for RGB data). Alpha
 * is dropped; all five scanline filters are supported.
 */
export function decodePng(buffer: Buffer): RgbImage {
  if (!buffer.subarray(0, 8).equals(PNG_SIGNATURE)) {
    throw new Error('not a PNG file (bad signature)')
  }
  let width = 0
  let height = 0
  let channels = 0
  let idat: Buffer[] = []
  let pos = 8
  while (pos + 8 <= buffer.length) {
    let length = buffer.readUInt32BE(pos)
    let type = buffer.toString('ascii', pos + 4, pos + 8)
    let data = buffer.subarray(pos + 8, pos + 8 + length)
    if (type === 'IHDR') {
      width = data.readUInt32BE(0)
      height = data.readUInt32BE(4)
      let bitDepth = data[8]
      let colorType = data[9]
      let interlace = data[12]
      if (bitDepth !== 8 || (colorType !== 2 && colorType !== 6) || interlace !== 0) {
        throw new Error(
          `unsupported PNG variant (bit depth ${bitDepth}, color type ${colorType}, interlace ${interlace})`,
        )
      }
      channels = colorType === 6 ? 4 : 3
    } else if (type === 'IDAT') {
      idat.push(data)
    } else if (type === 'IEND') {
      break
    }
    pos += 12 + length
  }
  if (!width || !height || !channels) {
    throw new Error('PNG has no IHDR chunk')
  }
  let raw = zlib.inflateSync(Buffer.concat(idat))
  let stride = width * channels
  if (raw.length !== height * (1 + stride)) {
    throw new Error(`PNG scanline data has ${raw.length} bytes, expected ${height * (1 + stride)}`)
  }
  let current = new Uint8Array(stride)
  let previous = new Uint8Array(stride)
  let pixels = new Uint8Array(width * height * 3)
  for (let row = 0; row < height; row++) {
    let offset = row * (1 + stride)
    let filter = raw[offset]
    for (let i = 0; i < stride; i++) {
      let x = raw[offset + 1 + i]
      let left = i >= channels ? current[i - channels] : 0
      let up = previous[i]
      let upLeft = i >= channels ? previous[i - channels] : 0
      switch (filter) {
        case 0:
          break
        case 1:
          x = (x + left) & 0xff
          break
        case 2:
          x = (x + up) & 0xff
          break
        case 3:
          x = (x + ((left + up) >> 1)) & 0xff
          break
        case 4:
          x = (x + paeth(left, up, upLeft)) & 0xff
          break
        default:
          throw new Error(`unknown PNG filter type ${filter} on row ${row}`)
      }
      current[i] = x
    }
    for (let col = 0; col < width; col++) {
      pixels[(row * width + col) * 3] = current[col * channels]
      pixels[(row * width + col) * 3 + 1] = current[col * channels + 1]
      pixels[(row * width + col) * 3 + 2] = current[col * channels + 2]
    }
    ;[previous, current] = [current, previous]
  }
  return { width, height, pixels }
}
