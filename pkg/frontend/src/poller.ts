// Version-based polling: re-fetch the session snapshot and notify only when
// the accepted-move count changed. One in-flight request at a time.

import type { GameServiceClient } from './api'
import type { SessionView } from './types'

export const POLL_INTERVAL_MS = 1500

export type Scheduler = (fn: () => void, ms: number) => unknown

export class SessionPoller {
  private lastVersion = -1
  private stopped = false
  private inFlight = false

  constructor(
    private readonly client: GameServiceClient,
    private readonly sessionId: string,
    private readonly onChange: (s: SessionView) => void,
    private readonly schedule: Scheduler = (fn, ms) => setTimeout(fn, ms),
    private readonly intervalMs: number = POLL_INTERVAL_MS,
  ) {}

  start(): void {
    this.stopped = false
    void this.tick()
  }

  stop(): void {
    this.stopped = true
  }

  /** Push a snapshot we already have (e.g. from a move response). */
  absorb(s: SessionView): void {
    if (s.version !== this.lastVersion) {
      this.lastVersion = s.version
      this.onChange(s)
    }
  }

  async tick(): Promise<void> {
    if (this.stopped || this.inFlight) return
    this.inFlight = true
    try {
      const snap = await this.client.getSession(this.sessionId)
      this.absorb(snap)
    } catch {
      // transient failures are retried on the next tick
    } finally {
      this.inFlight = false
    }
    if (!this.stopped) {
      this.schedule(() => void this.tick(), this.intervalMs)
    }
  }
}
