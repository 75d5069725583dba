/** Canvas drawing for the annotation overlay: the page image, red box
 * rectangles, the reading-order polyline and per-box text labels. */

import { rectToCanvas } from './coords.js'
import type { AnnotationSession } from './session.js'

export function drawOverlay(
  ctx: CanvasRenderingContext2D,
  session: AnnotationSession,
  page: CanvasImageSource | null,
): void {
  const canvas = ctx.canvas
  ctx.clearRect(0, 0, canvas.width, canvas.height)
  if (page) {
    ctx.drawImage(page, 0, 0, canvas.width, canvas.height)
  }

  const scale = session.displayScale
  for (const box of session.boxes) {
    const r = rectToCanvas({ x: box.x, y: box.y, w: box.w, h: box.h }, scale)
    ctx.lineWidth = box.id === session.selection ? 3 : 1.5
    ctx.strokeStyle =
      box.id === session.swapPick || session.pendingSwap?.includes(box.id)
        ? '#cc7700'
        : '#cc0000'
    ctx.strokeRect(r.x, r.y, r.w, r.h)
    if (box.text) {
      ctx.font = '12px sans-serif'
      ctx.fillStyle = '#0044bb'
      ctx.fillText(box.text, r.x, r.y + r.h + 12)
    }
  }

  const line = session.orderPolyline()
  if (line.length > 1) {
    ctx.beginPath()
    ctx.moveTo(line[0].x, line[0].y)
    for (const p of line.slice(1)) ctx.lineTo(p.x, p.y)
    ctx.strokeStyle = '#000000'
    ctx.lineWidth = 1
    ctx.stroke()
  }
}
