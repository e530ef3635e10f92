// Session state machine: fetch a query, collect one answer, repeat until the
// server stops the session. At most one mutating request is ever in flight;
// extra clicks while busy are dropped, which is what makes double-submission
// safe. nextQuery is idempotent server-side, so a network failure (or a
// server restart) is recovered by simply fetching the pending query again.

import { ApiClient, Phase, QueryRecord, SessionStatus } from './api.js'

export interface FlowState {
  sessionId: string | null
  phase: Phase | null
  answered: number
  pending: QueryRecord | null
  busy: boolean
  lastError: string | null
}

export class SessionFlow {
  readonly state: FlowState = {
    sessionId: null,
    phase: null,
    answered: 0,
    pending: null,
    busy: false,
    lastError: null,
  }

  constructor(private client: ApiClient) {}

  private applyStatus(status: SessionStatus): void {
    this.state.phase = status.phase
    this.state.answered = status.answered
  }

  async start(config: Record<string, unknown>): Promise<SessionStatus> {
    const status = await this.client.createSession(config)
    this.state.sessionId = status.id
    this.applyStatus(status)
    return status
  }

  async resume(sessionId: string): Promise<SessionStatus> {
    const status = await this.client.getSession(sessionId)
    this.state.sessionId = status.id
    this.applyStatus(status)
    return status
  }

  /** Fetch (or re-fetch) the pending query. Safe to retry after failures. */
  async loadQuery(): Promise<QueryRecord | null> {
    if (!this.state.sessionId || this.state.phase === 'stopped') return null
    try {
      const q = await this.client.nextQuery(this.state.sessionId)
      this.state.pending = q
      this.state.lastError = null
      return q
    } catch (err) {
      this.state.lastError = String(err)
      throw err
    }
  }

  /**
   * Submit the answer for the pending query. Returns null when the call is
   * dropped (no pending query, or another submission already in flight).
   */
  async answer(choice: 1 | 2, level: 1 | 2 | 3 | 4): Promise<SessionStatus | null> {
    if (this.state.busy || !this.state.pending || !this.state.sessionId) {
      return null
    }
    this.state.busy = true
    const queryId = this.state.pending.query_id
    try {
      const status = await this.client.submitAnswer(
        this.state.sessionId,
        queryId,
        choice,
        level,
      )
      this.state.pending = null
      this.applyStatus(status)
      this.state.lastError = null
      return status
    } catch (err) {
      this.state.lastError = String(err)
      throw err
    } finally {
      this.state.busy = false
    }
  }

  /** Drive a whole session with a scripted answerer (used by tests). */
  async runScripted(
    script: (query: QueryRecord, index: number) => { choice: 1 | 2; level: 1 | 2 | 3 | 4 },
    maxAnswers = 500,
  ): Promise<number> {
    let n = 0
    while (this.state.phase !== 'stopped' && n < maxAnswers) {
      const query = await this.loadQuery()
      if (!query) break
      const { choice, level } = script(query, n)
      const status = await this.answer(choice, level)
      if (status) n += 1
    }
    return n
  }
}
