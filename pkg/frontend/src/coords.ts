/** Canvas <-> page coordinate transforms.
 *
 * The canvas shows the page at one uniform display scale; page
 * coordinates are what the server stores. Converting to page space
 * rounds to whole pixels (boxes live on the pixel grid), so a round
 * trip is exact up to half a canvas pixel at the given scale.
 */

import type { Rect } from './types.js'

export interface Point {
  x: number
  y: number
}

export function pageToCanvas(p: Point, scale: number): Point {
  return { x: p.x * scale, y: p.y * scale }
}

export function canvasToPage(p: Point, scale: number): Point {
  return { x: Math.round(p.x / scale), y: Math.round(p.y / scale) }
}

export function rectToCanvas(r: Rect, scale: number): Rect {
  return { x: r.x * scale, y: r.y * scale, w: r.w * scale, h: r.h * scale }
}

/** Page rect from two drag endpoints in canvas space (any corner order). */
export function dragToPageRect(start: Point, end: Point, scale: number): Rect {
  const a = canvasToPage(start, scale)
  const b = canvasToPage(end, scale)
  const x = Math.min(a.x, b.x)
  const y = Math.min(a.y, b.y)
  return { x, y, w: Math.abs(a.x - b.x), h: Math.abs(a.y - b.y) }
}

export function rectContains(r: Rect, p: Point): boolean {
  return p.x >= r.x && p.x <= r.x + r.w && p.y >= r.y && p.y <= r.y + r.h
}

export function rectCenter(r: Rect): Point {
  return { x: r.x + r.w / 2, y: r.y + r.h / 2 }
}
