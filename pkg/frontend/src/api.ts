// Talks only to the scoring endpoints of the web server.

export interface ScoreReply {
  score: number;
  modelId: string;
}

export interface FetchLike {
  (url: string, init: {
    method: string;
    body?: BodyInit | Uint8Array;
    headers?: Record<string, string>;
  }): Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export async function submitScore(
  payload: Uint8Array,
  options: { endpoint?: string; fetchFn?: FetchLike } = {},
): Promise<ScoreReply> {
  const endpoint = options.endpoint ?? "/api/score";
  const fetchFn: FetchLike = options.fetchFn ?? (fetch as unknown as FetchLike);
  let response;
  try {
    response = await fetchFn(endpoint, {
      method: "POST",
      body: payload,
      headers: { "Content-Type": "application/octet-stream" },
    });
  } catch (err) {
    throw new ApiError(0, `network failure: ${err instanceof Error ? err.message : err}`);
  }
  let body: unknown = {};
  try {
    body = await response.json();
  } catch {
    // non-JSON error bodies fall through to the generic message
  }
  if (!response.ok) {
    const message = (body as { error?: string }).error ?? `HTTP ${response.status}`;
    throw new ApiError(response.status, message);
  }
  const data = body as { score?: number; model_id?: string };
  if (typeof data.score !== "number") {
    throw new ApiError(response.status, "malformed reply: missing score");
  }
  return { score: data.score, modelId: data.model_id ?? "unknown" };
}
