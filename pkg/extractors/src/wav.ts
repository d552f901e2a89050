import fs from 'fs'

export interface AudioClip {
  /** mono samples in [-1, 1] */
  samples: Float64Array
  sampleRate: number
}

/**
 * Parse a RIFF/WAVE file. Supports 16-bit PCM and 32-bit IEEE float;
 * multi-channel input is mixed down to mono by averaging.
 */
export function readWav(path: string): AudioClip {
  const buf = fs.readFileSync(path)
  if (buf.length < 12 || buf.toString('ascii', 0, 4) !== 'RIFF' || buf.toString('ascii', 8, 12) !== 'WAVE') {
    throw new Error(`${path}: not a RIFF/WAVE file`)
  }
  let offset = 12
  let format = 0
  let channels = 0
  let sampleRate = 0
  let bitsPerSample = 0
  let data: Buffer | null = null
  while (offset + 8 <= buf.length) {
    const chunkId = buf.toString('ascii', offset, offset + 4)
    const chunkSize = buf.readUInt32LE(offset + 4)
    const body = offset + 8
    if (chunkId === 'fmt ') {
      format = buf.readUInt16LE(body)
      channels = buf.readUInt16LE(body + 2)
      sampleRate = buf.readUInt32LE(body + 4)
      bitsPerSample = buf.readUInt16LE(body + 14)
    } else if (chunkId === 'data') {
      data = buf.subarray(body, body + chunkSize)
    }
    offset = body + chunkSize + (chunkSize % 2)
  }
  if (!data || channels < 1 || sampleRate < 1) {
    throw new Error(`${path}: missing fmt or data chunk`)
  }
  let frames: number
  let read: (frame: number, channel: number) => number
  if (format === 1 && bitsPerSample === 16) {
    frames = Math.floor(data.length / (2 * channels))
    const pcm = data
    read = (i, c) => pcm.readInt16LE((i * channels + c) * 2) / 32768
  } else if (format === 3 && bitsPerSample === 32) {
    frames = Math.floor(data.length / (4 * channels))
    const pcm = data
    read = (i, c) => pcm.readFloatLE((i * channels + c) * 4)
  } else {
    throw new Error(`${path}: unsupported format (need 16-bit PCM or 32-bit float, got format=${format}, bits=${bitsPerSample})`)
  }
  const mono = new Float64Array(frames)
  for (let i = 0; i < frames; i++) {
    let acc = 0
    for (let c = 0; c < channels; c++) acc += read(i, c)
    mono[i] = acc / channels
  }
  return { samples: mono, sampleRate }
}

/** Linear-interpolation resampling to the target rate. */
export function resample(clip: AudioClip, targetRate: number): AudioClip {
  if (clip.sampleRate === targetRate) return clip
  const ratio = targetRate / clip.sampleRate
  const n = Math.floor(clip.samples.length * ratio)
  const out = new Float64Array(n)
  for (let i = 0; i < n; i++) {
    const pos = i / ratio
    const left = Math.floor(pos)
    const right = Math.min(left + 1, clip.samples.length - 1)
    const frac = pos - left
    out[i] = clip.samples[left] * (1 - frac) + clip.samples[right] * frac
  }
  return { samples: out, sampleRate: targetRate }
}

/** Split into non-overlapping one-second segments; a trailing partial second is dropped. */
export function oneSecondSegments(clip: AudioClip): Float64Array[] {
  const per = clip.sampleRate
  const n = Math.floor(clip.samples.length / per)
  const segments: Float64Array[] = []
  for (let k = 0; k < n; k++) {
    segments.push(clip.samples.subarray(k * per, (k + 1) * per))
  }
  return segments
}
