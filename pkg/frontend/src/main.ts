// Browser entry point: a single-session wizard against a local service.

import { ApiClient } from './api.js'
import { SessionFlow } from './flow.js'
import { band1D, featureCards, heatmap2D, RenderDataError } from './render.js'
import {
  createAnswerPanel,
  renderBandSvg,
  renderFeatureCards,
  renderHeatmapTable,
  renderQuery,
} from './dom.js'

const params = new URLSearchParams(window.location.search)
const serverUrl = params.get('server') ?? 'http://127.0.0.1:8000'
const task = params.get('task') ?? 'thermal'
const calibrate = params.get('calibrate') === '1'

const client = new ApiClient(serverUrl)
const flow = new SessionFlow(client)

const statusEl = document.getElementById('status')!
const queryEl = document.getElementById('query')!
const chartEl = document.getElementById('chart')!
const controlsEl = document.getElementById('controls')!

function setStatus(text: string): void {
  statusEl.textContent = text
}

async function refreshPosterior(): Promise<void> {
  if (!flow.state.sessionId || flow.state.phase === 'calibrating') return
  const dims = task === 'tabletop' ? 2 : task === 'driving' ? 4 : 1
  chartEl.innerHTML = ''
  try {
    if (dims === 1) {
      const post = await client.getPosterior(flow.state.sessionId, 161)
      chartEl.appendChild(renderBandSvg(document, band1D(post)))
    } else if (dims === 2) {
      const post = await client.getPosterior(flow.state.sessionId, 41)
      chartEl.appendChild(renderHeatmapTable(document, heatmap2D(post, 'mean')))
      chartEl.appendChild(renderHeatmapTable(document, heatmap2D(post, 'variance')))
    }
    // 4D: no posterior plot; the query itself renders as feature cards
  } catch (err) {
    if (err instanceof RenderDataError) {
      chartEl.textContent = `chart unavailable: ${err.message}`
    } else {
      throw err
    }
  }
}

async function showNextQuery(): Promise<void> {
  if (flow.state.phase === 'stopped') {
    setStatus(
      `Session complete after ${flow.state.answered} answers. ` +
        `Export: ${serverUrl}/sessions/${flow.state.sessionId}/export`,
    )
    queryEl.innerHTML = ''
    return
  }
  try {
    const q = await flow.loadQuery()
    if (!q) return
    queryEl.innerHTML = ''
    queryEl.appendChild(renderQuery(document, q))
    if (q.x1.length === 4) {
      const bounds: Array<[number, number]> = [
        [0, 5],
        [0, 5],
        [0, 5],
        [0, 5],
      ]
      queryEl.appendChild(
        renderFeatureCards(document, featureCards(q.x1, q.x2, bounds)),
      )
    }
    setStatus(
      `Session ${flow.state.sessionId} — phase ${flow.state.phase}, ` +
        `${flow.state.answered} answered`,
    )
  } catch {
    setStatus('Server unreachable; the pending question is kept. Retrying…')
    setTimeout(showNextQuery, 1500)
  }
}

async function boot(): Promise<void> {
  setStatus('Starting session…')
  await flow.start({ task, calibrate })
  controlsEl.appendChild(
    createAnswerPanel(document, async ({ choice, level }) => {
      const status = await flow.answer(choice, level)
      if (!status) return // duplicate click while a submission is in flight
      await refreshPosterior()
      await showNextQuery()
    }),
  )
  await showNextQuery()
}

boot().catch((err) => setStatus(`failed to start: ${err}`))
