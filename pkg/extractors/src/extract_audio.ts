/**
 * Extract per-second audio frame embeddings from a directory of WAV files
 * into the embeddings JSONL interchange format.
 *
 * Pipeline per clip: decode, mix to mono, resample to 16 kHz, split into
 * one-second segments, compute a 96x64 log mel spectrogram per segment, and
 * map each segment to one frame vector. With --model a pretrained
 * TensorFlow.js graph model does the mapping; without it a deterministic
 * log-mel statistics embedder (128 dims) is used so extraction runs offline.
 *
 * Usage: extract_audio --in <dir> --out <jsonl> [--model <path>]
 */

import fs from 'fs'
import path from 'path'
import { parseArgs } from 'util'

import { FrameEmbedder, logMelStatsEmbedder, pretrainedEmbedder } from './embed'
import { checkEmbeddingsJsonl, EmbeddingEntry, writeEmbeddingsJsonl } from './schemas'
import { oneSecondSegments, readWav, resample } from './wav'

const TARGET_RATE = 16000

export interface ExtractionResult {
  entries: EmbeddingEntry[]
  failures: { id: string; error: string }[]
}

export function extractDirectory(audioDir: string, embedder: FrameEmbedder): ExtractionResult {
  const files = fs
    .readdirSync(audioDir)
    .filter((name) => name.toLowerCase().endsWith('.wav'))
    .sort()
  if (files.length === 0) {
    throw new Error(`no inputs: ${audioDir} contains no .wav files`)
  }
  const entries: EmbeddingEntry[] = []
  const failures: { id: string; error: string }[] = []
  for (const name of files) {
    const id = name.replace(/\.wav$/i, '')
    try {
      const clip = resample(readWav(path.join(audioDir, name)), TARGET_RATE)
      const segments = oneSecondSegments(clip)
      if (segments.length === 0) {
        throw new Error('clip is shorter than one second')
      }
      entries.push({ id, frames: segments.map((s) => embedder.embed(s)) })
    } catch (err) {
      failures.push({ id, error: err instanceof Error ? err.message : String(err) })
    }
  }
  // ids are already sorted by the directory scan; keep the output ordering
  // independent of any future parallel extraction
  entries.sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0))
  return { entries, failures }
}

export async function main(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      in: { type: 'string' },
      out: { type: 'string' },
      model: { type: 'string' },
    },
  })
  if (!values.in || !values.out) {
    console.error('usage: extract_audio --in <dir> --out <jsonl> [--model <path>]')
    return 2
  }
  const embedder = values.model ? await pretrainedEmbedder(values.model) : logMelStatsEmbedder()
  console.error(`embedder: ${embedder.name}`)
  const result = extractDirectory(values.in, embedder)
  for (const failure of result.failures) {
    console.error(`ERROR ${failure.id}: ${failure.error}`)
  }
  if (result.entries.length > 0) {
    writeEmbeddingsJsonl(values.out, result.entries)
    console.log(checkEmbeddingsJsonl(values.out))
  }
  return result.failures.length > 0 ? 1 : 0
}

if (require.main === module) {
  main(process.argv.slice(2)).then(
    (code) => process.exit(code),
    (err) => {
      console.error(`error: ${err instanceof Error ? err.message : err}`)
      process.exit(2)
    },
  )
}
