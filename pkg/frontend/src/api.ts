// Typed client over the game service. The only state-changing call is the
// moves endpoint; transcripts are kept as raw bytes so a download is
// byte-identical to what the server returned.

import type { MoveBody, MoveRejection, SessionView, SpaceDoc } from './types'

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export type MoveOutcome =
  | { kind: 'accepted'; session: SessionView }
  | { kind: 'conflict'; version: number }
  | { kind: 'rejected'; rejection: MoveRejection }

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message)
  }
}

export class GameServiceClient {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private url(path: string): string {
    return this.base.replace(/\/$/, '') + path
  }

  private async json<T>(res: Response): Promise<T> {
    if (!res.ok) throw new ApiError(res.status, await res.text())
    return (await res.json()) as T
  }

  async registerSpace(body: object): Promise<{ name: string; size: number }> {
    const res = await this.fetchImpl(this.url('/spaces'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    })
    return this.json(res)
  }

  async getSpace(name: string): Promise<SpaceDoc> {
    return this.json(await this.fetchImpl(this.url(`/spaces/${name}`)))
  }

  async createSession(body: object): Promise<SessionView> {
    const res = await this.fetchImpl(this.url('/sessions'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    })
    return this.json(res)
  }

  async getSession(id: string): Promise<SessionView> {
    return this.json(await this.fetchImpl(this.url(`/sessions/${id}`)))
  }

  // Raw text so "download transcript" is byte-identical to the server copy.
  async getTranscriptRaw(id: string): Promise<string> {
    const res = await this.fetchImpl(this.url(`/sessions/${id}/transcript`))
    if (!res.ok) throw new ApiError(res.status, await res.text())
    return await res.text()
  }

  /**
   * Post a move with optimistic versioning. Network failures retry with the
   * unchanged expect_version (a move accepted on a lost response then shows
   * up as a conflict, never as a duplicate). 409 means refresh; 422 carries
   * the server verdict.
   */
  async submitMove(
    id: string,
    expectVersion: number,
    move: MoveBody,
    retries = 2,
  ): Promise<MoveOutcome> {
    let lastError: unknown
    for (let attempt = 0; attempt <= retries; attempt++) {
      let res: Response
      try {
        res = await this.fetchImpl(this.url(`/sessions/${id}/moves`), {
          method: 'POST',
          headers: { 'content-type': 'application/json' },
          body: JSON.stringify({ expect_version: expectVersion, move }),
        })
      } catch (err) {
        lastError = err
        continue
      }
      if (res.status === 409) {
        const body = (await res.json()) as { version: number }
        return { kind: 'conflict', version: body.version }
      }
      if (res.status === 422) {
        return { kind: 'rejected', rejection: (await res.json()) as MoveRejection }
      }
      return { kind: 'accepted', session: await this.json<SessionView>(res) }
    }
    throw lastError instanceof Error ? lastError : new Error('network failure')
  }
}
