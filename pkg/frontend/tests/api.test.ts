import { describe, expect, it } from 'vitest'

import { GameServiceClient } from '../src/api'
import type { FetchLike } from '../src/api'
import type { SessionView } from '../src/types'

const snapshot = (version: number): SessionView => ({
  id: 's1',
  version,
  kind: 'fdc',
  space: 'path-12',
  bound: '4',
  max_rounds: 64,
  status: 'ongoing',
  turn: 'defender',
  pending: '4',
  schedule: ['4'],
  family: [[0, 1]],
})

const jsonResponse = (status: number, body: unknown): Response =>
  new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  })

describe('submitMove', () => {
  it('returns the new snapshot on acceptance', async () => {
    const calls: { url: string; body: unknown }[] = []
    const fake: FetchLike = async (url, init) => {
      calls.push({ url, body: JSON.parse(String(init?.body)) })
      return jsonResponse(200, snapshot(2))
    }
    const client = new GameServiceClient('http://svc', fake)
    const out = await client.submitMove('s1', 1, { challenge: '4' })
    expect(out).toEqual({ kind: 'accepted', session: snapshot(2) })
    expect(calls[0].url).toBe('http://svc/sessions/s1/moves')
    expect(calls[0].body).toEqual({ expect_version: 1, move: { challenge: '4' } })
  })

  it('maps 409 to a conflict carrying the server version', async () => {
    const fake: FetchLike = async () => jsonResponse(409, { error: 'version mismatch', version: 5 })
    const out = await new GameServiceClient('http://svc', fake).submitMove('s1', 1, {
      challenge: '4',
    })
    expect(out).toEqual({ kind: 'conflict', version: 5 })
  })

  it('maps 422 to a rejection with the witness pair', async () => {
    const fake: FetchLike = async () =>
      jsonResponse(422, { error: 'family not 4-disjoint', witness: [[0, 1], [5, 6]] })
    const out = await new GameServiceClient('http://svc', fake).submitMove('s1', 1, {
      response: { members: [[0, 1], [5, 6]] },
    })
    expect(out).toEqual({
      kind: 'rejected',
      rejection: { error: 'family not 4-disjoint', witness: [[0, 1], [5, 6]] },
    })
  })

  it('retries network failures with the unchanged version', async () => {
    let attempts = 0
    const fake: FetchLike = async (_url, init) => {
      attempts += 1
      if (attempts < 3) throw new Error('connection reset')
      expect(JSON.parse(String(init?.body)).expect_version).toBe(7)
      return jsonResponse(200, snapshot(8))
    }
    const out = await new GameServiceClient('http://svc', fake).submitMove('s1', 7, {
      challenge: '8',
    })
    expect(attempts).toBe(3)
    expect(out.kind).toBe('accepted')
  })

  it('gives up after the retry budget', async () => {
    const fake: FetchLike = async () => {
      throw new Error('down')
    }
    await expect(
      new GameServiceClient('http://svc', fake).submitMove('s1', 1, { challenge: '2' }),
    ).rejects.toThrow('down')
  })
})

describe('transcript download', () => {
  it('returns the raw bytes untouched', async () => {
    const raw = '{\n  "kind": "fdc",\n  "moves": []\n}\n'
    const fake: FetchLike = async () => new Response(raw, { status: 200 })
    const text = await new GameServiceClient('http://svc', fake).getTranscriptRaw('s1')
    expect(text).toBe(raw) // byte-identical to the server copy
  })

  it('raises ApiError on 404', async () => {
    const fake: FetchLike = async () => new Response('nope', { status: 404 })
    await expect(
      new GameServiceClient('http://svc', fake).getTranscriptRaw('missing'),
    ).rejects.toMatchObject({ status: 404 })
  })
})
