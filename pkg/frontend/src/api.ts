// Typed client for the judging service's /api/v1 endpoints. The judge-side
// surface deliberately knows nothing beyond {poem_id, title, body, progress}.

export interface Progress {
  rated: number;
  total: number;
}

export interface BlindPoem {
  poem_id: string;
  title: string;
  body: string;
  progress: Progress;
}

export interface SessionInfo {
  judge_id: string;
  display_name: string | null;
  progress: Progress;
}

export interface RatingAck {
  status: string;
  progress: Progress;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

/** Snap a raw slider/keyboard value to the 0.01 grid inside [0, 1]. */
export function quantize(value: number): number {
  if (Number.isNaN(value)) return 0;
  const clamped = Math.min(1, Math.max(0, value));
  return Math.round(clamped * 100) / 100;
}

export function formatProbability(value: number): string {
  return value.toFixed(2);
}

async function errorFrom(resp: Response): Promise<ApiError> {
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, detail);
}

export class JudgeApi {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private authHeaders(): Record<string, string> {
    return { Authorization: `Bearer ${this.token}` };
  }

  async openSession(): Promise<SessionInfo> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/v1/session`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ token: this.token }),
    });
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as SessionInfo;
  }

  /** Next unrated poem in this judge's private order, or null when done. */
  async next(): Promise<BlindPoem | null> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/v1/next`, {
      headers: this.authHeaders(),
    });
    if (resp.status === 204) return null;
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as BlindPoem;
  }

  async submitRating(poemId: string, probability: number): Promise<RatingAck> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/v1/rating`, {
      method: "POST",
      headers: { "Content-Type": "application/json", ...this.authHeaders() },
      body: JSON.stringify({ poem_id: poemId, probability }),
    });
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as RatingAck;
  }

  async progress(): Promise<Progress> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/v1/progress`, {
      headers: this.authHeaders(),
    });
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as Progress;
  }
}

export interface PlanView {
  k_min: number;
  seed: number;
  assignments: Record<string, string[]>;
  coverage: Record<string, string[]>;
}

export interface ExportRow {
  judge_id: string;
  poem_id: string;
  probability: number;
  submitted_at: string;
}

export function parseExportCsv(text: string): ExportRow[] {
  const lines = text.split("\n").filter((line) => line.trim().length > 0);
  if (lines.length === 0 || lines[0] !== "judge_id,poem_id,probability,submitted_at") {
    throw new Error("unexpected export header");
  }
  return lines.slice(1).map((line) => {
    const parts = line.split(",");
    if (parts.length < 4) throw new Error(`bad export row: ${line}`);
    return {
      judge_id: parts[0]!,
      poem_id: parts[1]!,
      probability: Number(parts[2]),
      submitted_at: parts.slice(3).join(","),
    };
  });
}

export class AdminApi {
  constructor(
    private readonly baseUrl: string,
    private readonly adminToken: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private authHeaders(): Record<string, string> {
    return { Authorization: `Bearer ${this.adminToken}` };
  }

  async plan(): Promise<PlanView> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/v1/plan`, {
      headers: this.authHeaders(),
    });
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as PlanView;
  }

  async exportRows(): Promise<ExportRow[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/v1/export`, {
      headers: this.authHeaders(),
    });
    if (!resp.ok) throw await errorFrom(resp);
    return parseExportCsv(await resp.text());
  }

  exportUrl(): string {
    return `${this.baseUrl}/api/v1/export`;
  }
}
