// Move composer: collects point selections into pieces and pieces into the
// two families (fdc) or one family (asc), enforcing structural
// well-formedness only. Legality (disjointness, bounds) stays on the server;
// the single advisory pre-check is the asc monotone-scale rule.

import { isPositiveRational, parseRational, compareRationals } from './rational'
import type { DecompositionMove, FamilyMove, MoveBody, SessionView } from './types'

export type PieceDraft = {
  points: number[]
  family: 0 | 1 // fdc: which of the two families; asc: always 0
}

export type ComposerState = {
  kind: 'fdc' | 'asc'
  memberIndex: number // fdc: which member of the current family is being split
  pieces: PieceDraft[]
  selection: number[] // points staged for the next piece
}

export const emptyComposer = (kind: 'fdc' | 'asc'): ComposerState => ({
  kind,
  memberIndex: 0,
  pieces: [],
  selection: [],
})

export const togglePoint = (state: ComposerState, point: number): ComposerState => {
  const selected = state.selection.includes(point)
  return {
    ...state,
    selection: selected
      ? state.selection.filter((p) => p !== point)
      : [...state.selection, point].sort((a, b) => a - b),
  }
}

export const commitPiece = (state: ComposerState, family: 0 | 1): ComposerState => {
  if (state.selection.length === 0) return state
  return {
    ...state,
    pieces: [...state.pieces, { points: state.selection, family }],
    selection: [],
  }
}

export const dropPiece = (state: ComposerState, index: number): ComposerState => ({
  ...state,
  pieces: state.pieces.filter((_, i) => i !== index),
})

export type StructuralCheck = { ok: true } | { ok: false; problem: string }

/** fdc: pieces must be nonempty, stay inside the member, cover it, not overlap. */
export const checkSplitStructure = (
  member: number[],
  pieces: PieceDraft[],
): StructuralCheck => {
  const memberSet = new Set(member)
  const seen = new Set<number>()
  if (pieces.length === 0) return { ok: false, problem: 'no pieces yet' }
  for (const piece of pieces) {
    if (piece.points.length === 0) return { ok: false, problem: 'empty piece' }
    for (const p of piece.points) {
      if (!memberSet.has(p)) return { ok: false, problem: `point ${p} outside the member` }
      if (seen.has(p)) return { ok: false, problem: `point ${p} in two pieces` }
      seen.add(p)
    }
  }
  if (seen.size !== memberSet.size) {
    const missing = member.filter((p) => !seen.has(p))
    return { ok: false, problem: `uncovered points: ${missing.join(', ')}` }
  }
  return { ok: true }
}

/** asc: pieces must be nonempty and pairwise non-overlapping (advisory). */
export const checkFamilyStructure = (pieces: PieceDraft[]): StructuralCheck => {
  const seen = new Set<number>()
  for (const piece of pieces) {
    if (piece.points.length === 0) return { ok: false, problem: 'empty piece' }
    for (const p of piece.points) {
      if (seen.has(p)) return { ok: false, problem: `point ${p} in two members` }
      seen.add(p)
    }
  }
  return { ok: true }
}

export const buildSplitMove = (
  session: SessionView,
  state: ComposerState,
): DecompositionMove => {
  if (!session.family || session.pending === null) {
    throw new Error('no split expected now')
  }
  const pending = session.pending
  const bound = parseRational(session.bound)
  const splits = session.family.map((member, i) => {
    if (i === state.memberIndex) {
      const check = checkSplitStructure(member, state.pieces)
      if (!check.ok) throw new Error(check.problem)
      return {
        member,
        v1: state.pieces.filter((p) => p.family === 0).map((p) => p.points),
        v2: state.pieces.filter((p) => p.family === 1).map((p) => p.points),
      }
    }
    // other members pass through untouched; the server treats a single piece
    // as a trivial split
    return { member, v1: [member], v2: [] }
  })
  void bound
  return { R: pending, partition: true, splits }
}

export const buildFamilyMove = (state: ComposerState): FamilyMove => {
  const check = checkFamilyStructure(state.pieces)
  if (!check.ok) throw new Error(check.problem)
  return { members: state.pieces.map((p) => p.points) }
}

export type ChallengeCheck = { ok: true; move: MoveBody } | { ok: false; problem: string }

/**
 * Advisory pre-check for a challenge: positive rational, and for asc strictly
 * above the previous scale. Rejected here before any network round trip.
 */
export const prepareChallenge = (session: SessionView, text: string): ChallengeCheck => {
  const value = text.trim()
  if (!isPositiveRational(value)) {
    return { ok: false, problem: `challenge must be a positive rational, got "${text}"` }
  }
  if (session.kind === 'asc' && session.schedule.length > 0) {
    const prev = session.schedule[session.schedule.length - 1]
    if (compareRationals(parseRational(value), parseRational(prev)) <= 0) {
      return { ok: false, problem: `challenge ${value} must exceed the previous scale ${prev}` }
    }
  }
  return { ok: true, move: { challenge: value } }
}
