// Rendering models, DOM-free: the distance-matrix heat view every space gets,
// and geometric layouts for the generator kinds that carry coordinates.

import { rationalToNumber } from './rational'
import type { SpaceDoc } from './types'

export type HeatCell = { i: number; j: number; value: number; shade: number }

export type HeatModel = {
  n: number
  maxValue: number
  cells: HeatCell[]
  highlighted: Set<number> // point indices to emphasize (verdict witnesses)
}

export const heatModel = (space: SpaceDoc, highlighted: number[] = []): HeatModel => {
  const d = space.metric.d
  const n = d.length
  let maxValue = 0
  const values: number[][] = d.map((row) => row.map(rationalToNumber))
  for (const row of values) for (const v of row) maxValue = Math.max(maxValue, v)
  const cells: HeatCell[] = []
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const value = values[i][j]
      cells.push({ i, j, value, shade: maxValue === 0 ? 0 : value / maxValue })
    }
  }
  return { n, maxValue, cells, highlighted: new Set(highlighted) }
}

export type LayoutPoint = { index: number; x: number; y: number }

/**
 * Geometric layout for generator kinds whose names carry coordinates:
 * path-N lays points on a line, grid-S^2 on a square lattice. Everything
 * else gets no layout (the heat view is the universal rendering).
 */
export const geometricLayout = (space: SpaceDoc): LayoutPoint[] | null => {
  const n = space.metric.d.length
  const path = space.name.match(/^path-(\d+)$/)
  if (path && Number(path[1]) === n) {
    return Array.from({ length: n }, (_, i) => ({ index: i, x: i, y: 0 }))
  }
  const grid = space.name.match(/^grid-(\d+)\^2$/)
  if (grid) {
    const side = Number(grid[1])
    if (side * side === n) {
      return Array.from({ length: n }, (_, i) => ({
        index: i,
        x: i % side,
        y: Math.floor(i / side),
      }))
    }
  }
  return null
}

/** Stable piece coloring: family index picks the hue family, piece the tone. */
export const pieceColor = (family: 0 | 1, piece: number): string => {
  const hue = family === 0 ? 210 : 20
  const light = 35 + ((piece * 17) % 40)
  return `hsl(${hue}, 70%, ${light}%)`
}
