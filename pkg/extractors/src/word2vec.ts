import fs from 'fs'

export interface WordVectorModel {
  dim: number
  get(token: string): number[] | undefined
  has(token: string): boolean
}

/**
 * Read a word2vec model. Files ending in .bin are parsed as the binary
 * format ("<count> <dim>\n" then per entry: token, space, dim float32 LE);
 * anything else as the text table format (optional "<count> <dim>" header,
 * then "token v1 ... v_dim" lines).
 */
export function loadWord2vec(path: string): WordVectorModel {
  return path.endsWith('.bin') ? loadBinary(path) : loadText(path)
}

function loadBinary(path: string): WordVectorModel {
  const buf = fs.readFileSync(path)
  const headerEnd = buf.indexOf(0x0a)
  if (headerEnd < 0) throw new Error(`${path}: missing binary header`)
  const header = buf.toString('ascii', 0, headerEnd).trim().split(/\s+/)
  const count = Number(header[0])
  const dim = Number(header[1])
  if (!Number.isInteger(count) || !Number.isInteger(dim) || count < 1 || dim < 1) {
    throw new Error(`${path}: malformed binary header '${header.join(' ')}'`)
  }
  const vectors = new Map<string, number[]>()
  let offset = headerEnd + 1
  for (let i = 0; i < count; i++) {
    while (offset < buf.length && (buf[offset] === 0x0a || buf[offset] === 0x20)) offset++
    const tokenEnd = buf.indexOf(0x20, offset)
    if (tokenEnd < 0) throw new Error(`${path}: truncated at entry ${i}`)
    const token = buf.toString('utf-8', offset, tokenEnd)
    offset = tokenEnd + 1
    if (offset + 4 * dim > buf.length) throw new Error(`${path}: truncated vector for '${token}'`)
    const vec = new Array<number>(dim)
    for (let j = 0; j < dim; j++) {
      vec[j] = buf.readFloatLE(offset + 4 * j)
    }
    offset += 4 * dim
    vectors.set(token, vec)
  }
  return { dim, get: (t) => vectors.get(t), has: (t) => vectors.has(t) }
}

function loadText(path: string): WordVectorModel {
  const lines = fs
    .readFileSync(path, 'utf-8')
    .split('\n')
    .filter((line) => line.trim() !== '')
  if (lines.length === 0) throw new Error(`${path}: empty model file`)
  const vectors = new Map<string, number[]>()
  let dim = -1
  let start = 0
  const first = lines[0].trim().split(/\s+/)
  if (first.length === 2 && Number.isInteger(Number(first[0])) && Number.isInteger(Number(first[1]))) {
    dim = Number(first[1])
    start = 1
  }
  for (let i = start; i < lines.length; i++) {
    const parts = lines[i].trim().split(/\s+/)
    const token = parts[0]
    const vec = parts.slice(1).map(Number)
    if (vec.length === 0 || vec.some((v) => !Number.isFinite(v))) {
      throw new Error(`${path}:${i + 1}: malformed vector`)
    }
    if (dim === -1) dim = vec.length
    if (vec.length !== dim) throw new Error(`${path}:${i + 1}: dim ${vec.length}, expected ${dim}`)
    vectors.set(token, vec)
  }
  if (vectors.size === 0) throw new Error(`${path}: empty model file`)
  return { dim, get: (t) => vectors.get(t), has: (t) => vectors.has(t) }
}
