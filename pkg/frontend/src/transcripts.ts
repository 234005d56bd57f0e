// Step-through model for finished or live transcripts: a cursor over moves
// with the families visible after each prefix, rebuilt client-side purely for
// display (the server's replay stays authoritative for legality).

import type { DecompositionMove, FamilyMove, TranscriptDoc, TranscriptMove } from './types'

export type FrameFamily = { points: number[]; family: 0 | 1 }

export type Frame = {
  moveIndex: number // how many moves have been applied
  round: number
  description: string
  families: FrameFamily[] // fdc: current pieces; asc: accumulated cover tiles
  uncovered: number[] // asc only; empty for fdc
}

const isDecomposition = (
  r: DecompositionMove | FamilyMove | undefined,
): r is DecompositionMove => !!r && 'splits' in r

export const frames = (t: TranscriptDoc): Frame[] => {
  const n = t.space.metric.d.length
  const all = Array.from({ length: n }, (_, i) => i)
  const out: Frame[] = []
  let fdcPieces: FrameFamily[] = [{ points: all, family: 0 }]
  let covered = new Set<number>()
  let ascTiles: FrameFamily[] = []

  out.push({
    moveIndex: 0,
    round: 0,
    description: `start: ${t.kind} on ${t.space.name}, bound ${t.bound}`,
    families: t.kind === 'fdc' ? [...fdcPieces] : [],
    uncovered: t.kind === 'asc' ? all : [],
  })

  t.moves.forEach((move: TranscriptMove, idx: number) => {
    let description: string
    if (move.challenge !== undefined) {
      description = `round ${move.round}: ${move.actor} challenges ${move.challenge}`
    } else if (isDecomposition(move.response)) {
      const pieces: FrameFamily[] = []
      for (const split of move.response.splits) {
        split.v1.forEach((p) => pieces.push({ points: p, family: 0 }))
        split.v2.forEach((p) => pieces.push({ points: p, family: 1 }))
      }
      fdcPieces = pieces
      description = `round ${move.round}: ${move.actor} splits into ${pieces.length} piece(s)`
    } else if (move.response) {
      const members = move.response.members
      members.forEach((m) => {
        ascTiles.push({ points: m, family: 0 })
        m.forEach((p) => covered.add(p))
      })
      description = `round ${move.round}: ${move.actor} plays ${members.length} tile(s)`
    } else {
      description = `round ${move.round}: ${move.actor}`
    }
    out.push({
      moveIndex: idx + 1,
      round: move.round,
      description,
      families: t.kind === 'fdc' ? [...fdcPieces] : [...ascTiles],
      uncovered: t.kind === 'asc' ? all.filter((p) => !covered.has(p)) : [],
    })
  })
  return out
}

export type Cursor = { frames: Frame[]; position: number }

export const openTranscript = (t: TranscriptDoc): Cursor => ({
  frames: frames(t),
  position: 0,
})

export const step = (c: Cursor, delta: number): Cursor => ({
  ...c,
  position: Math.min(c.frames.length - 1, Math.max(0, c.position + delta)),
})

export const current = (c: Cursor): Frame => c.frames[c.position]

/** Number of step frames equals the number of recorded moves. */
export const stepCount = (c: Cursor): number => c.frames.length - 1
