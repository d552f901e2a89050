import { logMelSpectrogram, N_MELS } from './melspec'

export const FALLBACK_DIM = 2 * N_MELS

export interface FrameEmbedder {
  name: string
  dim: number
  embed(segment: Float64Array): number[]
}

/**
 * Stand-in embedder used when no pretrained model file is supplied: per-band
 * mean and standard deviation of the 96x64 log mel spectrogram (128 dims).
 * Deterministic, so extraction stays reproducible offline.
 */
export function logMelStatsEmbedder(): FrameEmbedder {
  return {
    name: 'logmel-stats',
    dim: FALLBACK_DIM,
    embed(segment: Float64Array): number[] {
      const spec = logMelSpectrogram(segment)
      const mean = new Float64Array(N_MELS)
      for (const frame of spec) {
        for (let m = 0; m < N_MELS; m++) mean[m] += frame[m]
      }
      for (let m = 0; m < N_MELS; m++) mean[m] /= spec.length
      const std = new Float64Array(N_MELS)
      for (const frame of spec) {
        for (let m = 0; m < N_MELS; m++) {
          const d = frame[m] - mean[m]
          std[m] += d * d
        }
      }
      for (let m = 0; m < N_MELS; m++) std[m] = Math.sqrt(std[m] / spec.length)
      return [...mean, ...std]
    },
  }
}

/**
 * Embedder backed by a pretrained TensorFlow.js graph model that maps a
 * 96x64 log mel patch to an embedding vector. Requires @tensorflow/tfjs
 * (and @tensorflow/tfjs-node for file:// URLs) to be installed.
 */
export async function pretrainedEmbedder(modelPath: string): Promise<FrameEmbedder> {
  let tf: any
  try {
    const specifier = '@tensorflow/tfjs' // optional dependency, resolved at runtime
    tf = await import(specifier)
  } catch {
    throw new Error('pretrained model requested but @tensorflow/tfjs is not installed')
  }
  const model = await tf.loadGraphModel(`file://${modelPath}`)
  return {
    name: `pretrained:${modelPath}`,
    dim: -1, // discovered from the first output
    embed(segment: Float64Array): number[] {
      const spec = logMelSpectrogram(segment)
      const input = tf.tensor4d([spec.map((f) => Array.from(f))], [1, spec.length, N_MELS, 1])
      const out = model.predict(input)
      const values = Array.from(out.dataSync()) as number[]
      input.dispose()
      out.dispose()
      return values
    },
  }
}
