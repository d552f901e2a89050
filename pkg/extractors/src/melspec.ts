/**
 * Log mel spectrogram of a one-second 16 kHz segment: 96 frames (25 ms Hann
 * window, 10 ms hop) by 64 mel bands spanning 125-7500 Hz, log(mel + 0.01).
 */

export const SAMPLE_RATE = 16000
export const N_FRAMES = 96
export const N_MELS = 64
const WINDOW = 400 // 25 ms
const HOP = 160 // 10 ms
const FFT_SIZE = 512
const MEL_LOW_HZ = 125
const MEL_HIGH_HZ = 7500
const LOG_OFFSET = 0.01

function hzToMel(hz: number): number {
  return 2595 * Math.log10(1 + hz / 700)
}

/** In-place iterative radix-2 FFT on interleaved real/imaginary arrays. */
function fft(re: Float64Array, im: Float64Array): void {
  const n = re.length
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1
    for (; j & bit; bit >>= 1) j ^= bit
    j ^= bit
    if (i < j) {
      ;[re[i], re[j]] = [re[j], re[i]]
      ;[im[i], im[j]] = [im[j], im[i]]
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const angle = (-2 * Math.PI) / len
    const wRe = Math.cos(angle)
    const wIm = Math.sin(angle)
    for (let i = 0; i < n; i += len) {
      let curRe = 1
      let curIm = 0
      for (let k = 0; k < len / 2; k++) {
        const uRe = re[i + k]
        const uIm = im[i + k]
        const vRe = re[i + k + len / 2] * curRe - im[i + k + len / 2] * curIm
        const vIm = re[i + k + len / 2] * curIm + im[i + k + len / 2] * curRe
        re[i + k] = uRe + vRe
        im[i + k] = uIm + vIm
        re[i + k + len / 2] = uRe - vRe
        im[i + k + len / 2] = uIm - vIm
        const nextRe = curRe * wRe - curIm * wIm
        curIm = curRe * wIm + curIm * wRe
        curRe = nextRe
      }
    }
  }
}

function hannWindow(size: number): Float64Array {
  const w = new Float64Array(size)
  for (let i = 0; i < size; i++) {
    w[i] = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / (size - 1))
  }
  return w
}

function melFilterbank(): Float64Array[] {
  const nBins = FFT_SIZE / 2 + 1
  const melLow = hzToMel(MEL_LOW_HZ)
  const melHigh = hzToMel(MEL_HIGH_HZ)
  const melPoints: number[] = []
  for (let m = 0; m < N_MELS + 2; m++) {
    melPoints.push(melLow + ((melHigh - melLow) * m) / (N_MELS + 1))
  }
  const binMels: number[] = []
  for (let b = 0; b < nBins; b++) {
    binMels.push(hzToMel((b * SAMPLE_RATE) / FFT_SIZE))
  }
  const filters: Float64Array[] = []
  for (let m = 0; m < N_MELS; m++) {
    const [lo, center, hi] = [melPoints[m], melPoints[m + 1], melPoints[m + 2]]
    const filter = new Float64Array(nBins)
    for (let b = 0; b < nBins; b++) {
      const mel = binMels[b]
      if (mel > lo && mel < hi) {
        filter[b] = mel <= center ? (mel - lo) / (center - lo) : (hi - mel) / (hi - center)
      }
    }
    filters.push(filter)
  }
  return filters
}

const HANN = hannWindow(WINDOW)
const FILTERS = melFilterbank()

/** 96x64 log mel spectrogram of one 16 kHz second. */
export function logMelSpectrogram(segment: Float64Array): Float64Array[] {
  if (segment.length !== SAMPLE_RATE) {
    throw new Error(`segment must hold exactly ${SAMPLE_RATE} samples, got ${segment.length}`)
  }
  const frames: Float64Array[] = []
  const re = new Float64Array(FFT_SIZE)
  const im = new Float64Array(FFT_SIZE)
  const power = new Float64Array(FFT_SIZE / 2 + 1)
  for (let f = 0; f < N_FRAMES; f++) {
    const start = f * HOP
    re.fill(0)
    im.fill(0)
    for (let i = 0; i < WINDOW; i++) {
      re[i] = segment[start + i] * HANN[i]
    }
    fft(re, im)
    for (let b = 0; b <= FFT_SIZE / 2; b++) {
      power[b] = re[b] * re[b] + im[b] * im[b]
    }
    const mel = new Float64Array(N_MELS)
    for (let m = 0; m < N_MELS; m++) {
      let acc = 0
      const filter = FILTERS[m]
      for (let b = 0; b < power.length; b++) acc += filter[b] * power[b]
      mel[m] = Math.log(acc + LOG_OFFSET)
    }
    frames.push(mel)
  }
  return frames
}
