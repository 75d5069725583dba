/** Browser bootstrap: wires DOM events to the annotation session.
 *
 * Interactions mirror the desktop original: left-drag draws a box,
 * click selects, dragging a selected box's corner resizes it, arrow
 * keys nudge by one page pixel, Delete removes, right-click picks the
 * swap pair and "x" swaps them. Buttons run the serialize / recognize /
 * finalize phases; text inputs under the canvas edit transcripts.
 */

import { ApiClient, ApiError } from './api.js'
import type { Point } from './coords.js'
import { drawOverlay } from './render.js'
import { AnnotationSession } from './session.js'

const SERVICE_URL =
  new URLSearchParams(location.search).get('service') ?? 'http://127.0.0.1:8077'
const CORNER_GRIP = 8

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id)
  if (!found) throw new Error(`missing #${id}`)
  return found as T
}

const canvas = el<HTMLCanvasElement>('page-canvas')
const ctx = canvas.getContext('2d')!
const fileInput = el<HTMLInputElement>('page-file')
const statusLine = el<HTMLDivElement>('status-line')
const textsPanel = el<HTMLDivElement>('texts-panel')
const serializeBtn = el<HTMLButtonElement>('serialize-btn')
const recognizeBtn = el<HTMLButtonElement>('recognize-btn')
const finalizeBtn = el<HTMLButtonElement>('finalize-btn')

const api = new ApiClient(SERVICE_URL)
let pageImage: HTMLImageElement | null = null

const session = new AnnotationSession(api, {
  onChange: redraw,
  onConflict: () => confirm('Someone else changed this page. Re-apply your edit?'),
  onError: (err: ApiError) => {
    statusLine.textContent = `error ${err.code}: ${err.message}`
  },
})

function redraw(): void {
  drawOverlay(ctx, session, pageImage)
  statusLine.textContent =
    `status: ${session.status}  boxes: ${session.boxes.length}  revision: ${session.revision}`
  renderTexts()
  finalizeBtn.disabled = !session.finalizeEnabled()
}

function renderTexts(): void {
  textsPanel.replaceChildren()
  for (const id of session.order) {
    const box = session.box(id)
    if (!box) continue
    const row = document.createElement('div')
    const label = document.createElement('span')
    label.textContent = id
    const input = document.createElement('input')
    input.value = box.text ?? ''
    input.addEventListener('change', () => {
      void session.setText(id, input.value)
    })
    row.append(label, input)
    textsPanel.append(row)
  }
}

function canvasPoint(ev: MouseEvent): Point {
  const bounds = canvas.getBoundingClientRect()
  return { x: ev.clientX - bounds.left, y: ev.clientY - bounds.top }
}

type DragMode =
  | { kind: 'draw'; start: Point }
  | { kind: 'corner'; id: string; corner: 'nw' | 'ne' | 'se' | 'sw' }
let drag: DragMode | null = null

function cornerAt(p: Point): { id: string; corner: 'nw' | 'ne' | 'se' | 'sw' } | null {
  if (!session.selection) return null
  const box = session.box(session.selection)
  if (!box) return null
  const s = session.displayScale
  const corners = {
    nw: { x: box.x * s, y: box.y * s },
    ne: { x: (box.x + box.w) * s, y: box.y * s },
    se: { x: (box.x + box.w) * s, y: (box.y + box.h) * s },
    sw: { x: box.x * s, y: (box.y + box.h) * s },
  } as const
  for (const corner of ['nw', 'ne', 'se', 'sw'] as const) {
    const c = corners[corner]
    if (Math.abs(c.x - p.x) <= CORNER_GRIP && Math.abs(c.y - p.y) <= CORNER_GRIP) {
      return { id: box.id, corner }
    }
  }
  return null
}

canvas.addEventListener('mousedown', (ev) => {
  if (ev.button === 2) return
  const p = canvasPoint(ev)
  const grip = cornerAt(p)
  if (grip) {
    drag = { kind: 'corner', ...grip }
  } else if (session.selectAt(p)) {
    redraw()
  } else {
    drag = { kind: 'draw', start: p }
  }
})

canvas.addEventListener('mouseup', (ev) => {
  if (!drag) return
  const p = canvasPoint(ev)
  if (drag.kind === 'draw') {
    void session.drawBox(drag.start, p)
  } else {
    void session.dragCorner(drag.id, drag.corner, p)
  }
  drag = null
})

canvas.addEventListener('contextmenu', (ev) => {
  ev.preventDefault()
  session.rightClick(canvasPoint(ev))
  redraw()
})

document.addEventListener('keydown', (ev) => {
  if ((ev.target as HTMLElement | null)?.tagName === 'INPUT') return
  const arrows: Record<string, 'up' | 'down' | 'left' | 'right'> = {
    ArrowUp: 'up', ArrowDown: 'down', ArrowLeft: 'left', ArrowRight: 'right',
  }
  if (ev.key in arrows) {
    ev.preventDefault()
    void session.arrowKey(arrows[ev.key])
  } else if (ev.key === 'Delete' || ev.key === 'Backspace') {
    void session.deleteKey()
  } else if (ev.key === 'x') {
    void session.swapKey()
  } else if (ev.key === 's') {
    void session.serialize()
  }
})

fileInput.addEventListener('change', async () => {
  const file = fileInput.files?.[0]
  if (!file) return
  statusLine.textContent = 'uploading...'
  await session.open(file)
  pageImage = new Image()
  pageImage.onload = () => {
    const view = session.view!
    session.displayScale = canvas.width / view.project.page.width
    canvas.height = Math.round(view.project.page.height * session.displayScale)
    redraw()
  }
  pageImage.src = api.imageUrl(session.id)
})

serializeBtn.addEventListener('click', () => void session.serialize())
recognizeBtn.addEventListener('click', () => void session.recognize())
finalizeBtn.addEventListener('click', async () => {
  const out = await session.finalize()
  statusLine.textContent = `finalized: ${out.transcriptPath}`
})
