import { describe, expect, it } from 'vitest'

import { ApiClient, ApiError, FetchLike } from '../src/api.js'

interface Recorded {
  url: string
  method: string
  body: unknown
}

function recordingFetch(
  responses: Array<{ status: number; body: unknown }>,
): { fetchFn: FetchLike; calls: Recorded[] } {
  const calls: Recorded[] = []
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({
      url,
      method: init?.method ?? 'GET',
      body: init?.body ? JSON.parse(String(init.body)) : null,
    })
    const next = responses.shift() ?? { status: 500, body: { detail: 'exhausted' } }
    return new Response(JSON.stringify(next.body), { status: next.status })
  }
  return { fetchFn, calls }
}

describe('ApiClient', () => {
  it('composes session endpoints and passes payloads through untouched', async () => {
    const posterior = {
      schema_version: 1,
      phase: 'learning',
      grid: [[10.0], [10.1]],
      mean: [0.123456789012345, -0.2],
      variance: [0.9999999, 0.5],
    }
    const { fetchFn, calls } = recordingFetch([
      { status: 200, body: { schema_version: 1, id: 'abc', phase: 'learning', answered: 0 } },
      { status: 200, body: posterior },
    ])
    const client = new ApiClient('http://host:1', fetchFn)
    await client.createSession({ task: 'thermal' })
    const got = await client.getPosterior('abc', 161)

    expect(calls[0]).toEqual({
      url: 'http://host:1/sessions',
      method: 'POST',
      body: { task: 'thermal' },
    })
    expect(calls[1].url).toBe('http://host:1/sessions/abc/posterior?grid=161')
    // the client never fabricates or rounds values: payload passes through
    expect(got).toEqual(posterior)
  })

  it('posts answers with the exact wire field names', async () => {
    const { fetchFn, calls } = recordingFetch([
      { status: 200, body: { schema_version: 1, id: 's', phase: 'learning', answered: 1 } },
    ])
    const client = new ApiClient('http://h', fetchFn)
    await client.submitAnswer('s', 'q-000001', 2, 3)
    expect(calls[0].body).toEqual({ query_id: 'q-000001', choice: 2, level: 3 })
  })

  it('maps error responses to ApiError with status and detail', async () => {
    const { fetchFn } = recordingFetch([
      { status: 409, body: { detail: 'pending mismatch' } },
    ])
    const client = new ApiClient('http://h', fetchFn)
    await expect(client.nextQuery('s')).rejects.toMatchObject({
      status: 409,
      detail: 'pending mismatch',
    })
    expect(new ApiError(400, 'x')).toBeInstanceOf(Error)
  })
})
