import fs from 'fs'

export interface EmbeddingEntry {
  id: string
  frames: number[][]
}

/** Write embeddings JSONL: one {"id", "frames": [...]} object per line. */
export function writeEmbeddingsJsonl(path: string, entries: EmbeddingEntry[]): void {
  const lines = entries.map((e) => JSON.stringify({ id: e.id, frames: e.frames }))
  fs.writeFileSync(path, lines.join('\n') + '\n')
}

/**
 * Re-parse an embeddings JSONL file and check it against the interchange
 * schema: unique non-empty ids, at least one frame each, one uniform frame
 * dimension, finite values. Returns a printable summary.
 */
export function checkEmbeddingsJsonl(path: string): string {
  const lines = fs
    .readFileSync(path, 'utf-8')
    .split('\n')
    .filter((line) => line.trim() !== '')
  if (lines.length === 0) throw new Error(`${path}: no entries`)
  const ids = new Set<string>()
  let dim = -1
  let frameCount = 0
  lines.forEach((line, i) => {
    const where = `${path}:${i + 1}`
    let entry: any
    try {
      entry = JSON.parse(line)
    } catch {
      throw new Error(`${where}: not valid JSON`)
    }
    if (typeof entry.id !== 'string' || entry.id === '') throw new Error(`${where}: missing id`)
    if (ids.has(entry.id)) throw new Error(`${where}: duplicate id '${entry.id}'`)
    ids.add(entry.id)
    if (!Array.isArray(entry.frames) || entry.frames.length === 0) {
      throw new Error(`${where}: 'frames' must be a non-empty array`)
    }
    for (const frame of entry.frames) {
      if (!Array.isArray(frame) || frame.length === 0) throw new Error(`${where}: empty frame`)
      if (dim === -1) dim = frame.length
      if (frame.length !== dim) throw new Error(`${where}: frame dim ${frame.length}, expected ${dim}`)
      for (const v of frame) {
        if (typeof v !== 'number' || !Number.isFinite(v)) throw new Error(`${where}: non-finite value`)
      }
      frameCount++
    }
  })
  return `schema check: ${ids.size} entries, ${frameCount} frames, dim ${dim}: OK`
}

/** Write a word-vector table in the text format with a "<count> <dim>" header. */
export function writeVectorTable(path: string, entries: Map<string, number[]>, dim: number): void {
  const lines = [`${entries.size} ${dim}`]
  for (const [token, vec] of entries) {
    lines.push(token + ' ' + vec.map((v) => String(v)).join(' '))
  }
  fs.writeFileSync(path, lines.join('\n') + '\n')
}

/** Re-parse a text vector table and check the header, shape, and values. */
export function checkVectorTable(path: string): string {
  const lines = fs
    .readFileSync(path, 'utf-8')
    .split('\n')
    .filter((line) => line.trim() !== '')
  if (lines.length < 2) throw new Error(`${path}: table has no entries`)
  const header = lines[0].split(/\s+/)
  const count = Number(header[0])
  const dim = Number(header[1])
  if (header.length !== 2 || !Number.isInteger(count) || !Number.isInteger(dim)) {
    throw new Error(`${path}:1: expected '<count> <dim>' header`)
  }
  if (lines.length - 1 !== count) {
    throw new Error(`${path}: header declares ${count} entries, found ${lines.length - 1}`)
  }
  const seen = new Set<string>()
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(' ')
    const where = `${path}:${i + 1}`
    if (parts.length !== dim + 1) throw new Error(`${where}: expected ${dim} values`)
    const token = parts[0]
    if (token === '' || seen.has(token)) throw new Error(`${where}: bad or duplicate token`)
    if (token !== token.toLowerCase()) throw new Error(`${where}: token '${token}' is not lowercase`)
    seen.add(token)
    for (let j = 1; j < parts.length; j++) {
      if (!Number.isFinite(Number(parts[j]))) throw new Error(`${where}: non-finite value`)
    }
  }
  return `schema check: ${count} tokens, dim ${dim}: OK`
}

/** Lowercase a label and split it on whitespace and underscore runs. */
export function tokenizeLabel(label: string): string[] {
  return label
    .trim()
    .toLowerCase()
    .split(/[\s_]+/)
    .filter((t) => t !== '')
}

/**
 * Read the tokens of a label file: either the labels CSV ("label,category"
 * header) or one plain label per line. Returns unique lowercased tokens in
 * first-appearance order.
 */
export function readLabelTokens(path: string): string[] {
  const lines = fs
    .readFileSync(path, 'utf-8')
    .split('\n')
    .filter((line) => line.trim() !== '')
  let labels: string[]
  if (lines.length > 0 && lines[0].trim() === 'label,category') {
    labels = lines.slice(1).map((line) => line.split(',')[0])
  } else {
    labels = lines
  }
  const tokens: string[] = []
  const seen = new Set<string>()
  for (const label of labels) {
    for (const token of tokenizeLabel(label)) {
      if (!seen.has(token)) {
        seen.add(token)
        tokens.push(token)
      }
    }
  }
  return tokens
}
