// Payload shapes of the game service API. Rationals travel as "p" or "p/q"
// strings; point sets as arrays of indices.

export type GameKind = 'fdc' | 'asc'

export type SessionStatus =
  | 'ongoing'
  | 'defender_won'
  | 'player_i_won'
  | 'move_limit_reached'

export type SessionView = {
  id: string
  version: number
  kind: GameKind
  space: string
  bound: string
  max_rounds: number
  status: SessionStatus
  turn: string | null
  pending: string | null
  schedule: string[]
  family?: number[][]
  mesh?: string
  covers?: number[][][]
  uncovered?: number[]
}

export type SpaceDoc = {
  name: string
  metric: { type: 'matrix'; d: string[][] }
}

export type SplitDoc = {
  member: number[]
  v1: number[][]
  v2: number[][]
}

export type DecompositionMove = {
  R: string
  partition: boolean
  splits: SplitDoc[]
}

export type FamilyMove = {
  members: number[][]
}

export type MoveBody =
  | { challenge: string }
  | { response: DecompositionMove | FamilyMove }

export type TranscriptMove = {
  round: number
  actor: string
  challenge?: string
  response?: DecompositionMove | FamilyMove
}

export type TranscriptDoc = {
  kind: GameKind
  space: SpaceDoc
  bound: string
  max_rounds: number
  moves: TranscriptMove[]
  status: SessionStatus
}

export type MoveRejection = {
  error: string
  witness: number[][] | null
}
