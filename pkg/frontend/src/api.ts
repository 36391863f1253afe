import type {
  AnswerResponse,
  CheckpointInfo,
  CreateSessionResponse,
  SessionDetail,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<never> {
  let message = `HTTP ${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") message = body.detail;
    else message = JSON.stringify(body);
  } catch {
    /* non-JSON error body; keep the status text */
  }
  throw new ApiError(resp.status, message);
}

export interface CreateSessionRequest {
  image_png_base64: string;
  checkpoint_id?: string;
  max_answers?: number;
  ground_truth_png_base64?: string;
  allow_resize?: boolean;
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, init);
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/healthz");
  }

  listCheckpoints(): Promise<{ checkpoints: CheckpointInfo[] }> {
    return this.request("/checkpoints");
  }

  createSession(req: CreateSessionRequest): Promise<CreateSessionResponse> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  submitColorAnswer(sessionId: string, color: [number, number, number]): Promise<AnswerResponse> {
    return this.request(`/sessions/${sessionId}/answers`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ mode: "custom", color }),
    });
  }

  submitOracleAnswer(sessionId: string): Promise<AnswerResponse> {
    return this.request(`/sessions/${sessionId}/answers`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ mode: "oracle" }),
    });
  }

  getSession(sessionId: string, includeArrays = false): Promise<SessionDetail> {
    const suffix = includeArrays ? "?include_arrays=1" : "";
    return this.request(`/sessions/${sessionId}${suffix}`);
  }

  closeSession(sessionId: string): Promise<{ closed: boolean }> {
    return this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }
}
