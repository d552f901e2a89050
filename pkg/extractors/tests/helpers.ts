import fs from 'fs'

/** Write a WAV file from per-channel sample arrays in [-1, 1]. */
export function writeWav(
  path: string,
  channels: number[][],
  sampleRate: number,
  format: 'pcm16' | 'float32' = 'pcm16',
): void {
  const nChannels = channels.length
  const nFrames = channels[0].length
  const bytesPerSample = format === 'pcm16' ? 2 : 4
  const dataSize = nFrames * nChannels * bytesPerSample
  const buf = Buffer.alloc(44 + dataSize)
  buf.write('RIFF', 0, 'ascii')
  buf.writeUInt32LE(36 + dataSize, 4)
  buf.write('WAVE', 8, 'ascii')
  buf.write('fmt ', 12, 'ascii')
  buf.writeUInt32LE(16, 16)
  buf.writeUInt16LE(format === 'pcm16' ? 1 : 3, 20)
  buf.writeUInt16LE(nChannels, 22)
  buf.writeUInt32LE(sampleRate, 24)
  buf.writeUInt32LE(sampleRate * nChannels * bytesPerSample, 28)
  buf.writeUInt16LE(nChannels * bytesPerSample, 32)
  buf.writeUInt16LE(8 * bytesPerSample, 34)
  buf.write('data', 36, 'ascii')
  buf.writeUInt32LE(dataSize, 40)
  let offset = 44
  for (let i = 0; i < nFrames; i++) {
    for (let c = 0; c < nChannels; c++) {
      const v = channels[c][i]
      if (format === 'pcm16') {
        buf.writeInt16LE(Math.max(-32768, Math.min(32767, Math.round(v * 32767))), offset)
        offset += 2
      } else {
        buf.writeFloatLE(v, offset)
        offset += 4
      }
    }
  }
  fs.writeFileSync(path, buf)
}

export function sine(freqHz: number, seconds: number, sampleRate: number, gain = 0.5): number[] {
  const n = Math.round(seconds * sampleRate)
  const out = new Array<number>(n)
  for (let i = 0; i < n; i++) {
    out[i] = gain * Math.sin((2 * Math.PI * freqHz * i) / sampleRate)
  }
  return out
}

/** Write a word2vec binary model file (float32 little-endian vectors). */
export function writeBinaryModel(path: string, entries: [string, number[]][]): void {
  const dim = entries[0][1].length
  const chunks: Buffer[] = [Buffer.from(`${entries.length} ${dim}\n`, 'ascii')]
  for (const [token, vec] of entries) {
    chunks.push(Buffer.from(token + ' ', 'utf-8'))
    const body = Buffer.alloc(4 * dim)
    vec.forEach((v, i) => body.writeFloatLE(Math.fround(v), 4 * i))
    chunks.push(body, Buffer.from('\n'))
  }
  fs.writeFileSync(path, Buffer.concat(chunks))
}
