// Thin DOM layer. Takes the Document explicitly so the wiring is testable
// without a browser; all displayed numbers come from the models in render.ts.

import { QueryRecord } from './api.js'
import {
  BandModel,
  FeatureCard,
  HeatmapModel,
  colorPosition,
  confidenceButtons,
} from './render.js'

export interface AnswerSelection {
  choice: 1 | 2
  level: 1 | 2 | 3 | 4
}

/**
 * Two option buttons plus the four confidence buttons (level 1..4 left to
 * right). An answer fires only when both a choice and a level are picked.
 */
export function createAnswerPanel(
  doc: Document,
  onAnswer: (sel: AnswerSelection) => void,
): HTMLElement {
  const root = doc.createElement('div')
  root.className = 'answer-panel'
  let choice: 1 | 2 | null = null

  const choiceRow = doc.createElement('div')
  choiceRow.className = 'choice-row'
  for (const c of [1, 2] as const) {
    const btn = doc.createElement('button')
    btn.textContent = `Prefer option ${c}`
    btn.setAttribute('data-choice', String(c))
    btn.addEventListener('click', () => {
      choice = c
    })
    choiceRow.appendChild(btn)
  }
  root.appendChild(choiceRow)

  const levelRow = doc.createElement('div')
  levelRow.className = 'level-row'
  for (const spec of confidenceButtons()) {
    const btn = doc.createElement('button')
    btn.textContent = spec.label
    btn.setAttribute('data-level', String(spec.level))
    btn.addEventListener('click', () => {
      if (choice !== null) {
        onAnswer({ choice, level: spec.level })
        choice = null
      }
    })
    levelRow.appendChild(btn)
  }
  root.appendChild(levelRow)
  return root
}

export function renderQuery(doc: Document, query: QueryRecord): HTMLElement {
  const el = doc.createElement('div')
  el.className = 'query'
  const fmt = (x: number[]) => x.map((v) => v.toFixed(3)).join(', ')
  el.innerHTML = ''
  const title = doc.createElement('p')
  title.textContent =
    query.phase === 'calibrating'
      ? 'Calibration: which option has the higher stated value?'
      : 'Which option do you prefer?'
  el.appendChild(title)
  for (const [label, x, calib] of [
    ['Option 1', query.x1, query.calib_values?.[0]],
    ['Option 2', query.x2, query.calib_values?.[1]],
  ] as const) {
    const p = doc.createElement('p')
    p.textContent =
      calib === undefined || calib === null
        ? `${label}: (${fmt(x)})`
        : `${label}: (${fmt(x)}) with stated value ${calib.toFixed(4)}`
    el.appendChild(p)
  }
  return el
}

/** 1D band as an SVG path: mean line plus a shaded 1.96-std region. */
export function renderBandSvg(
  doc: Document,
  model: BandModel,
  width = 640,
  height = 280,
): SVGSVGElement {
  const svg = doc.createElementNS('http://www.w3.org/2000/svg', 'svg')
  svg.setAttribute('viewBox', `0 0 ${width} ${height}`)
  const xs = model.x
  const lo = Math.min(...model.lower)
  const hi = Math.max(...model.upper)
  const sx = (x: number) =>
    ((x - xs[0]) / (xs[xs.length - 1] - xs[0] || 1)) * (width - 20) + 10
  const sy = (y: number) => height - 10 - ((y - lo) / (hi - lo || 1)) * (height - 20)

  const bandPts = [
    ...model.upper.map((y, i) => `${sx(xs[i])},${sy(y)}`),
    ...model.lower
      .map((y, i) => `${sx(xs[i])},${sy(y)}`)
      .reverse(),
  ].join(' ')
  const band = doc.createElementNS('http://www.w3.org/2000/svg', 'polygon')
  band.setAttribute('points', bandPts)
  band.setAttribute('fill', 'rgba(70, 120, 200, 0.25)')
  svg.appendChild(band)

  const line = doc.createElementNS('http://www.w3.org/2000/svg', 'polyline')
  line.setAttribute(
    'points',
    model.mean.map((y, i) => `${sx(xs[i])},${sy(y)}`).join(' '),
  )
  line.setAttribute('fill', 'none')
  line.setAttribute('stroke', '#24508f')
  line.setAttribute('stroke-width', '2')
  svg.appendChild(line)
  return svg
}

/** 2D layer as a table of colored cells sharing one scale. */
export function renderHeatmapTable(doc: Document, model: HeatmapModel): HTMLElement {
  const table = doc.createElement('table')
  table.className = 'heatmap'
  for (let j = model.ys.length - 1; j >= 0; j--) {
    const tr = doc.createElement('tr')
    for (let i = 0; i < model.xs.length; i++) {
      const td = doc.createElement('td')
      const t = colorPosition(model.cells[i][j], model.min, model.max)
      const shade = Math.round(235 - t * 180)
      td.setAttribute(
        'style',
        `background: rgb(${shade}, ${shade}, 255); width: 6px; height: 6px;`,
      )
      tr.appendChild(td)
    }
    table.appendChild(tr)
  }
  return table
}

export function renderFeatureCards(doc: Document, cards: FeatureCard[]): HTMLElement {
  const root = doc.createElement('div')
  root.className = 'feature-cards'
  for (const card of cards) {
    const el = doc.createElement('div')
    el.className = 'feature-card'
    const name = doc.createElement('p')
    name.textContent = `${card.label}: ${card.v1.toFixed(2)} vs ${card.v2.toFixed(2)}`
    el.appendChild(name)
    for (const frac of [card.frac1, card.frac2]) {
      const bar = doc.createElement('div')
      bar.className = 'bar'
      bar.setAttribute('style', `width: ${(frac * 100).toFixed(1)}%`)
      el.appendChild(bar)
    }
    root.appendChild(el)
  }
  return root
}
