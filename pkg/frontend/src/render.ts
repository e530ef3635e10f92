// Pure render-model builders. They transform posterior payloads into the
// arrays a chart needs and nothing else: no fetching, no math beyond the
// band width, so everything a chart shows traces back to an API response.

import { PosteriorGrid } from './api.js'

export class RenderDataError extends Error {}

export interface BandModel {
  x: number[]
  mean: number[]
  lower: number[]
  upper: number[]
}

const Z95 = 1.96

/** 1D posterior band: mean with a half-width of exactly 1.96 * std. */
export function band1D(post: PosteriorGrid): BandModel {
  const { grid, mean, variance } = post
  if (
    grid.length === 0 ||
    grid.length !== mean.length ||
    grid.length !== variance.length
  ) {
    throw new RenderDataError(
      `grid/mean/variance lengths differ: ${grid.length}/${mean.length}/${variance.length}`,
    )
  }
  if (grid.some((row) => row.length !== 1)) {
    throw new RenderDataError('band rendering needs a 1D grid')
  }
  if (variance.some((v) => !(v >= 0))) {
    throw new RenderDataError('negative or non-numeric variance')
  }
  const half = variance.map((v) => Z95 * Math.sqrt(v))
  return {
    x: grid.map((row) => row[0]),
    mean: [...mean],
    lower: mean.map((m, i) => m - half[i]),
    upper: mean.map((m, i) => m + half[i]),
  }
}

export interface HeatmapModel {
  xs: number[]
  ys: number[]
  cells: number[][] // cells[i][j] = value at (xs[i], ys[j])
  min: number
  max: number
}

/** 2D posterior layer (mean or variance) on a rectangular lattice. */
export function heatmap2D(post: PosteriorGrid, layer: 'mean' | 'variance'): HeatmapModel {
  const { grid } = post
  const values = layer === 'mean' ? post.mean : post.variance
  if (grid.length === 0 || grid.length !== values.length) {
    throw new RenderDataError('grid and values disagree')
  }
  if (grid.some((row) => row.length !== 2)) {
    throw new RenderDataError('heatmap rendering needs a 2D grid')
  }
  const xs = [...new Set(grid.map((r) => r[0]))].sort((a, b) => a - b)
  const ys = [...new Set(grid.map((r) => r[1]))].sort((a, b) => a - b)
  if (xs.length * ys.length !== grid.length) {
    throw new RenderDataError('grid is not a full rectangular lattice')
  }
  const index = new Map<string, number>()
  grid.forEach((row, i) => index.set(`${row[0]}|${row[1]}`, i))
  const cells = xs.map((x) =>
    ys.map((y) => {
      const i = index.get(`${x}|${y}`)
      if (i === undefined) throw new RenderDataError(`missing cell (${x}, ${y})`)
      return values[i]
    }),
  )
  return {
    xs,
    ys,
    cells,
    min: Math.min(...values),
    max: Math.max(...values),
  }
}

/** Shared color scale across layers: value -> [0, 1] position. */
export function colorPosition(value: number, min: number, max: number): number {
  if (max <= min) return 0.5
  return Math.min(1, Math.max(0, (value - min) / (max - min)))
}

export interface FeatureCard {
  label: string
  v1: number
  v2: number
  frac1: number
  frac2: number
}

/** Per-feature bars for pairs in spaces too wide to plot (e.g. 4D). */
export function featureCards(
  x1: number[],
  x2: number[],
  bounds: Array<[number, number]>,
  labels?: string[],
): FeatureCard[] {
  if (x1.length !== x2.length || x1.length !== bounds.length) {
    throw new RenderDataError('feature vectors and bounds disagree')
  }
  return x1.map((v1, i) => {
    const [lo, hi] = bounds[i]
    const span = hi - lo
    return {
      label: labels?.[i] ?? `feature ${i + 1}`,
      v1,
      v2: x2[i],
      frac1: span > 0 ? (v1 - lo) / span : 0.5,
      frac2: span > 0 ? (x2[i] - lo) / span : 0.5,
    }
  })
}

export interface ConfidenceButton {
  level: 1 | 2 | 3 | 4
  label: string
}

/** On-screen order is level 1 to 4, left to right. */
export function confidenceButtons(): ConfidenceButton[] {
  return [
    { level: 1, label: 'Very confident' },
    { level: 2, label: 'Confident' },
    { level: 3, label: 'Uncertain' },
    { level: 4, label: 'Very uncertain' },
  ]
}
