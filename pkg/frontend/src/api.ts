/**
 * Typed client for the prediction service JSON API.
 *
 * Every probability shown in the UI comes through this client; nothing is
 * computed locally. The client keeps a request log so tests (and debugging
 * panels) can trace each displayed number back to a service response.
 */

export interface PlayerPayload {
  id: string;
  team: "home" | "away";
  x: number;
  y: number;
  vx: number;
  vy: number;
  extrapolated?: boolean;
}

export interface BallPayload {
  x: number;
  y: number;
  vx: number;
  vy: number;
}

export interface FramePayload {
  frame_id: number;
  timestamp: number;
  period: number;
  attacking_team: "home" | "away";
  gender: "women" | "men";
  ball: BallPayload;
  players: PlayerPayload[];
  label?: number;
}

export interface ModelInfo {
  name: string;
  version: string;
}

export interface Rotation {
  player_id: string;
  degrees: number;
}

export interface Prediction {
  model: string;
  probability: number;
  version: string;
}

export interface SweepPoint {
  degrees: number;
  probability: number;
}

export interface WhatIfResponse {
  model: string;
  version: string;
  base_probability: number;
  new_probability: number;
  delta_percentage_points: number;
  sweep?: {
    player_id: string;
    step: number;
    points: SweepPoint[];
    best_degrees: number;
    best_probability: number;
  };
}

export interface FramesPage {
  total: number;
  offset: number;
  frames: FramePayload[];
}

export interface ServiceError {
  code: string;
  message: string;
  field?: string;
}

export interface RequestLogEntry {
  method: string;
  path: string;
  body?: unknown;
  response?: unknown;
  status: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: ServiceError,
  ) {
    super(detail.message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  readonly log: RequestLogEntry[] = [];

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const entry: RequestLogEntry = { method, path, body, status: 0 };
    this.log.push(entry);
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      entry.status = -1;
      throw new ApiError(0, {
        code: "unreachable",
        message: err instanceof Error ? err.message : "service unreachable",
      });
    }
    entry.status = response.status;
    const parsed = (await response.json()) as unknown;
    entry.response = parsed;
    if (!response.ok) {
      throw new ApiError(response.status, parsed as ServiceError);
    }
    return parsed as T;
  }

  health(): Promise<{ status: string; models: ModelInfo[] }> {
    return this.request("GET", "/health");
  }

  models(): Promise<{ models: ModelInfo[] }> {
    return this.request("GET", "/models");
  }

  frames(offset = 0, limit = 20): Promise<FramesPage> {
    return this.request("GET", `/frames?offset=${offset}&limit=${limit}`);
  }

  predict(model: string, frame: FramePayload): Promise<Prediction> {
    return this.request("POST", "/predict", { model, frame });
  }

  predictAll(frame: FramePayload): Promise<{ predictions: Prediction[] }> {
    return this.request("POST", "/predict", { model: "all", frame });
  }

  whatIf(
    model: string,
    frame: FramePayload,
    rotations: Rotation[],
    sweep?: { player_id: string; step: number },
  ): Promise<WhatIfResponse> {
    const body: Record<string, unknown> = { model, frame, rotations };
    if (sweep) body.sweep = sweep;
    return this.request("POST", "/whatif", body);
  }
}
