/** DOM-free annotation session: holds the mirrored server state and
 * turns pointer/keyboard interactions into service edits.
 *
 * The server stays the single source of truth: every mutation posts
 * first and the local state is rebuilt from the server after the
 * acknowledgment. Mutations queue so only one is in flight at a time.
 * A stale-revision conflict triggers a refresh and an optional
 * re-apply prompt (never a silent merge).
 */

import { ApiClient, ApiError } from './api.js'
import { dragToPageRect, rectCenter, rectContains, type Point } from './coords.js'
import type { BoxDto, Edit, Rect, SessionView } from './types.js'

export type ConflictPrompt = (edit: Edit) => boolean | Promise<boolean>

export interface SessionEvents {
  onChange?: () => void
  onConflict?: ConflictPrompt
  onError?: (err: ApiError) => void
}

export class AnnotationSession {
  id = ''
  revision = -1
  view: SessionView | null = null
  displayScale = 1
  selection: string | null = null
  swapPick: string | null = null
  pendingSwap: [string, string] | null = null

  private queue: Promise<unknown> = Promise.resolve()

  constructor(
    private api: ApiClient,
    private events: SessionEvents = {},
  ) {}

  // -- lifecycle ---------------------------------------------------------

  async open(image: Blob, filename = 'page.png'): Promise<void> {
    const created = await this.api.createSession(image, filename)
    this.id = created.id
    await this.refresh()
  }

  async refresh(): Promise<void> {
    const view = await this.api.getSession(this.id)
    this.view = view
    this.revision = view.revision
    const ids = new Set(view.project.boxes.map((b) => b.id))
    if (this.selection && !ids.has(this.selection)) this.selection = null
    if (this.swapPick && !ids.has(this.swapPick)) this.swapPick = null
    this.events.onChange?.()
  }

  get boxes(): BoxDto[] {
    return this.view?.project.boxes ?? []
  }

  get order(): string[] {
    return this.view?.project.order ?? []
  }

  get status(): string {
    return this.view?.project.status ?? ''
  }

  box(id: string): BoxDto | undefined {
    return this.boxes.find((b) => b.id === id)
  }

  /** Ordered box centers in canvas coordinates, for the order overlay. */
  orderPolyline(): Point[] {
    return this.order
      .map((id) => this.box(id))
      .filter((b): b is BoxDto => Boolean(b))
      .map((b) => {
        const c = rectCenter({ x: b.x, y: b.y, w: b.w, h: b.h })
        return { x: c.x * this.displayScale, y: c.y * this.displayScale }
      })
  }

  finalizeEnabled(): boolean {
    const byId = new Map(this.boxes.map((b) => [b.id, b]))
    return (
      this.order.length > 0 &&
      this.order.every((id) => (byId.get(id)?.text ?? '').length > 0)
    )
  }

  // -- mutation plumbing ---------------------------------------------------

  private enqueue<T>(work: () => Promise<T>): Promise<T> {
    const next = this.queue.then(work)
    this.queue = next.catch(() => undefined) // keep the chain alive on errors
    return next
  }

  /** Post one edit; on a stale revision, refresh and ask before re-applying. */
  applyEdit(edit: Edit): Promise<void> {
    return this.enqueue(async () => {
      try {
        await this.api.postEdit(this.id, this.revision, edit)
      } catch (err) {
        if (err instanceof ApiError && err.code === 'conflict') {
          await this.refresh()
          const retry = await (this.events.onConflict?.(edit) ?? true)
          if (retry) {
            await this.api.postEdit(this.id, this.revision, edit)
          } else {
            return
          }
        } else {
          if (err instanceof ApiError) this.events.onError?.(err)
          throw err
        }
      }
      await this.refresh()
    })
  }

  // -- interactions ---------------------------------------------------------

  /** Left-click drag on empty canvas: draw a new box. Zero-area drags are
   * ignored silently. */
  drawBox(startCanvas: Point, endCanvas: Point): Promise<void> {
    const rect = dragToPageRect(startCanvas, endCanvas, this.displayScale)
    if (rect.w <= 0 || rect.h <= 0) return Promise.resolve()
    return this.applyEdit({ op: 'add', rect })
  }

  /** Hit-test at a canvas point; selects and returns the topmost box id. */
  selectAt(canvasPoint: Point): string | null {
    const p = {
      x: canvasPoint.x / this.displayScale,
      y: canvasPoint.y / this.displayScale,
    }
    const hits = this.boxes.filter((b) =>
      rectContains({ x: b.x, y: b.y, w: b.w, h: b.h }, p))
    if (!hits.length) {
      this.selection = null
      return null
    }
    hits.sort((a, b) => a.w * a.h - b.w * b.h)
    this.selection = hits[0].id
    return this.selection
  }

  /** Corner drag: the opposite corner stays anchored. */
  dragCorner(id: string, corner: 'nw' | 'ne' | 'se' | 'sw', toCanvas: Point): Promise<void> {
    const box = this.box(id)
    if (!box) return Promise.resolve()
    const p = {
      x: Math.round(toCanvas.x / this.displayScale),
      y: Math.round(toCanvas.y / this.displayScale),
    }
    const x0 = corner.includes('w') ? p.x : box.x
    const y0 = corner.includes('n') ? p.y : box.y
    const x1 = corner.includes('e') ? p.x : box.x + box.w
    const y1 = corner.includes('s') ? p.y : box.y + box.h
    const rect: Rect = {
      x: Math.min(x0, x1), y: Math.min(y0, y1),
      w: Math.abs(x1 - x0), h: Math.abs(y1 - y0),
    }
    if (rect.w <= 0 || rect.h <= 0) return Promise.resolve()
    return this.applyEdit({ op: 'update', id, rect })
  }

  /** Edge drag moves one side of the rectangle. */
  dragEdge(id: string, edge: 'n' | 'e' | 's' | 'w', toCanvas: Point): Promise<void> {
    const box = this.box(id)
    if (!box) return Promise.resolve()
    const v = Math.round(
      (edge === 'n' || edge === 's' ? toCanvas.y : toCanvas.x) / this.displayScale)
    let { x, y, w, h } = box
    if (edge === 'n') { h = y + h - v; y = v }
    if (edge === 's') { h = v - y }
    if (edge === 'w') { w = x + w - v; x = v }
    if (edge === 'e') { w = v - x }
    if (w <= 0 || h <= 0) return Promise.resolve()
    return this.applyEdit({ op: 'update', id, rect: { x, y, w, h } })
  }

  /** Arrow keys translate the hovered/selected box by one page pixel. */
  arrowKey(direction: 'up' | 'down' | 'left' | 'right'): Promise<void> {
    const box = this.selection ? this.box(this.selection) : undefined
    if (!box) return Promise.resolve()
    const dx = direction === 'left' ? -1 : direction === 'right' ? 1 : 0
    const dy = direction === 'up' ? -1 : direction === 'down' ? 1 : 0
    return this.applyEdit({
      op: 'update', id: box.id,
      rect: { x: box.x + dx, y: box.y + dy, w: box.w, h: box.h },
    })
  }

  deleteKey(): Promise<void> {
    if (!this.selection) return Promise.resolve()
    const id = this.selection
    this.selection = null
    return this.applyEdit({ op: 'delete', id })
  }

  /** Right-click picks the two swap participants, swapKey posts the swap. */
  rightClick(canvasPoint: Point): void {
    const id = this.selectAt(canvasPoint)
    if (!id) return
    if (this.swapPick && this.swapPick !== id) {
      this.pendingSwap = [this.swapPick, id]
      this.swapPick = null
    } else {
      this.swapPick = id
      this.pendingSwap = null
    }
  }

  swapKey(): Promise<void> {
    if (!this.pendingSwap) return Promise.resolve()
    const [a, b] = this.pendingSwap
    this.pendingSwap = null
    return this.applyEdit({ op: 'swap', a, b })
  }

  setText(id: string, text: string): Promise<void> {
    return this.applyEdit({ op: 'set_text', id, text })
  }

  // -- phases ---------------------------------------------------------------

  serialize(): Promise<void> {
    return this.enqueue(async () => {
      await this.api.serialize(this.id)
      await this.refresh()
    })
  }

  recognize(): Promise<Record<string, string>> {
    return this.enqueue(async () => {
      const result = await this.api.recognize(this.id)
      await this.refresh()
      return result.texts
    })
  }

  finalize(): Promise<{ transcriptPath: string; datasetDir: string }> {
    return this.enqueue(async () => {
      const result = await this.api.finalize(this.id)
      await this.refresh()
      return { transcriptPath: result.transcript_path, datasetDir: result.dataset_dir }
    })
  }
}
