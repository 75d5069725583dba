/** Wire types mirrored from the annotation service. */

export interface Rect {
  x: number
  y: number
  w: number
  h: number
}

export interface BoxDto {
  id: string
  x: number
  y: number
  w: number
  h: number
  angle: number
  score?: number
  text?: string
  text_edited: boolean
}

export interface ProjectDto {
  version: number
  page: { source: string; width: number; height: number; scale: number }
  boxes: BoxDto[]
  order: string[]
  status: string
}

export interface SessionView {
  id: string
  revision: number
  project: ProjectDto
  lines: string[][]
  display: { width: number; height: number }
}

export interface CreateResponse {
  id: string
  boxes: BoxDto[]
  revision: number
}

export interface SerializeResponse {
  order: string[]
  lines: string[][]
  revision: number
}

export interface RecognizeResponse {
  texts: Record<string, string>
  scores: Record<string, number>
  revision: number
}

export interface FinalizeResponse {
  transcript_path: string
  dataset_dir: string
  revision: number
}

export type Edit =
  | { op: 'add'; rect: Rect }
  | { op: 'delete'; id: string }
  | { op: 'update'; id: string; rect: Rect }
  | { op: 'swap'; a: string; b: string }
  | { op: 'set_text'; id: string; text: string }

export interface ErrorBody {
  code: string
  message: string
  details: Record<string, unknown>
}
