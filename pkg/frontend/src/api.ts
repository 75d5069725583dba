/** Thin fetch client for the annotation service. */

import type {
  CreateResponse,
  Edit,
  ErrorBody,
  FinalizeResponse,
  RecognizeResponse,
  SerializeResponse,
  SessionView,
} from './types.js'

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public details: Record<string, unknown> = {},
  ) {
    super(message)
  }
}

async function parse<T>(resp: Response): Promise<T> {
  const text = await resp.text()
  const body = text ? JSON.parse(text) : {}
  if (!resp.ok) {
    const err = body as ErrorBody
    throw new ApiError(resp.status, err.code ?? 'http_error', err.message ?? resp.statusText, err.details ?? {})
  }
  return body as T
}

export class ApiClient {
  constructor(public baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path
  }

  async createSession(image: Blob, filename = 'page.png'): Promise<CreateResponse> {
    const form = new FormData()
    form.append('image', image, filename)
    return parse(await fetch(this.url('/sessions'), { method: 'POST', body: form }))
  }

  async getSession(id: string): Promise<SessionView> {
    return parse(await fetch(this.url(`/sessions/${id}`)))
  }

  async postEdit(id: string, revision: number, edit: Edit): Promise<{ revision: number }> {
    return parse(await fetch(this.url(`/sessions/${id}/edits`), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ revision, edit }),
    }))
  }

  async serialize(id: string): Promise<SerializeResponse> {
    return parse(await fetch(this.url(`/sessions/${id}/serialize`), { method: 'POST' }))
  }

  async recognize(id: string): Promise<RecognizeResponse> {
    return parse(await fetch(this.url(`/sessions/${id}/recognize`), { method: 'POST' }))
  }

  async finalize(id: string): Promise<FinalizeResponse> {
    return parse(await fetch(this.url(`/sessions/${id}/finalize`), { method: 'POST' }))
  }

  imageUrl(id: string): string {
    return this.url(`/sessions/${id}/image`)
  }
}
