/**
 * Export the word vectors needed by a label set from a pretrained word2vec
 * model into the text-table interchange format.
 *
 * Tokens are the lowercased words of every label (split on whitespace and
 * underscores). Tokens absent from the model are listed in a sidecar
 * "<out>.missing.txt" file; their absence is a warning, not a failure.
 *
 * Usage: export_vectors --model <path> --labels <file> --out <table>
 */

import fs from 'fs'
import { parseArgs } from 'util'

import { checkVectorTable, readLabelTokens, writeVectorTable } from './schemas'
import { loadWord2vec } from './word2vec'

export interface ExportResult {
  exported: Map<string, number[]>
  missing: string[]
  dim: number
}

export function exportTokens(modelPath: string, labelsPath: string): ExportResult {
  const tokens = readLabelTokens(labelsPath)
  if (tokens.length === 0) {
    throw new Error(`no tokens: ${labelsPath} contains no labels`)
  }
  const model = loadWord2vec(modelPath)
  const exported = new Map<string, number[]>()
  const missing: string[] = []
  for (const token of tokens) {
    const vec = model.get(token)
    if (vec === undefined) {
      missing.push(token)
    } else {
      exported.set(token, vec)
    }
  }
  return { exported, missing, dim: model.dim }
}

export async function main(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      model: { type: 'string' },
      labels: { type: 'string' },
      out: { type: 'string' },
    },
  })
  if (!values.model || !values.labels || !values.out) {
    console.error('usage: export_vectors --model <path> --labels <file> --out <table>')
    return 2
  }
  const result = exportTokens(values.model, values.labels)
  if (result.exported.size === 0) {
    console.error('error: none of the label tokens exist in the model')
    return 1
  }
  writeVectorTable(values.out, result.exported, result.dim)
  if (result.missing.length > 0) {
    const sidecar = `${values.out}.missing.txt`
    fs.writeFileSync(sidecar, result.missing.join('\n') + '\n')
    console.error(`warning: ${result.missing.length} tokens missing from the model -> ${sidecar}`)
  }
  console.log(checkVectorTable(values.out))
  return 0
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
