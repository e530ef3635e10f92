// Typed client for the elicitation service. Every number the UI shows comes
// out of these responses; nothing is computed in the browser.

export type Phase = 'calibrating' | 'learning' | 'stopped'

export interface SessionStatus {
  schema_version: number
  id: string
  phase: Phase
  answered: number
  calibration_answered: number
  calibration_total: number | null
  learning_answered: number
  uncertainty_factors: Record<string, number | string>
}

export interface QueryRecord {
  schema_version?: number
  query_id: string
  phase: Phase
  x1: number[]
  x2: number[]
  calib_values: [number, number] | null
  presented_at: string
}

export interface PosteriorGrid {
  schema_version: number
  phase: Phase
  grid: number[][]
  mean: number[]
  variance: number[]
}

export interface SessionExport {
  schema_version: number
  id: string
  phase: Phase
  config: Record<string, unknown>
  transcript: Array<Record<string, unknown>>
  posterior: { points: number[][]; f_lap: number[]; iterations: number }
  [key: string]: unknown
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`)
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init)
    const text = await resp.text()
    if (!resp.ok) {
      let detail = text
      try {
        detail = JSON.parse(text).detail ?? text
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new ApiError(resp.status, detail)
    }
    return JSON.parse(text) as T
  }

  createSession(config: Record<string, unknown>): Promise<SessionStatus> {
    return this.request('/sessions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(config),
    })
  }

  getSession(id: string): Promise<SessionStatus> {
    return this.request(`/sessions/${id}`)
  }

  nextQuery(id: string): Promise<QueryRecord> {
    return this.request(`/sessions/${id}/query`)
  }

  submitAnswer(
    id: string,
    queryId: string,
    choice: 1 | 2,
    level: 1 | 2 | 3 | 4,
  ): Promise<SessionStatus> {
    return this.request(`/sessions/${id}/answer`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ query_id: queryId, choice, level }),
    })
  }

  getPosterior(id: string, grid: number): Promise<PosteriorGrid> {
    return this.request(`/sessions/${id}/posterior?grid=${grid}`)
  }

  exportSession(id: string): Promise<SessionExport> {
    return this.request(`/sessions/${id}/export`)
  }
}
