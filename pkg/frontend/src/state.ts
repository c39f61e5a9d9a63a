/**
 * Single-user session state for the what-if explorer.
 *
 * All probabilities come from the service; edits trigger one joint what-if
 * request covering every pending rotation. Stale responses are dropped
 * (latest-wins) and failed requests roll the state back to the last good
 * snapshot, so a dead service never corrupts what is on screen.
 */

import {
  ApiClient,
  ApiError,
  FramePayload,
  Prediction,
  SweepPoint,
  WhatIfResponse,
} from "./api.js";

export interface SessionSnapshot {
  frame: FramePayload | null;
  model: string;
  rotations: Record<string, number>; // player_id -> degrees, multiples of step
  baseProbability: number | null;
  liveProbability: number | null;
  deltaPercentagePoints: number | null;
  modelVersion: string | null;
}

export interface SweepResult {
  playerId: string;
  points: SweepPoint[];
  bestDegrees: number;
  bestProbability: number;
}

function snapshotOf(s: SessionSnapshot): SessionSnapshot {
  return {
    frame: s.frame,
    model: s.model,
    rotations: { ...s.rotations },
    baseProbability: s.baseProbability,
    liveProbability: s.liveProbability,
    deltaPercentagePoints: s.deltaPercentagePoints,
    modelVersion: s.modelVersion,
  };
}

export class SessionStore {
  readonly stepDegrees: number;

  private state: SessionSnapshot = {
    frame: null,
    model: "",
    rotations: {},
    baseProbability: null,
    liveProbability: null,
    deltaPercentagePoints: null,
    modelVersion: null,
  };
  private undoStack: SessionSnapshot[] = [];
  private requestSeq = 0;
  private lastError: ApiError | null = null;
  private sweepCache = new Map<string, SweepResult>();
  private listeners: Array<(s: SessionSnapshot) => void> = [];

  constructor(
    private readonly api: ApiClient,
    options: { stepDegrees?: number } = {},
  ) {
    this.stepDegrees = options.stepDegrees ?? 15;
  }

  get snapshot(): SessionSnapshot {
    return snapshotOf(this.state);
  }

  get error(): ApiError | null {
    return this.lastError;
  }

  subscribe(listener: (s: SessionSnapshot) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    const snap = this.snapshot;
    for (const fn of this.listeners) fn(snap);
  }

  /** Load a frame and fetch its baseline probability from the service. */
  async loadFrame(frame: FramePayload, model: string): Promise<void> {
    const seq = ++this.requestSeq;
    const prior = snapshotOf(this.state);
    try {
      const pred = await this.api.predict(model, frame);
      if (seq !== this.requestSeq) return; // superseded by a newer edit
      this.undoStack.push(prior);
      this.state = {
        frame,
        model,
        rotations: {},
        baseProbability: pred.probability,
        liveProbability: pred.probability,
        deltaPercentagePoints: 0,
        modelVersion: pred.version,
      };
      this.sweepCache.clear();
      this.lastError = null;
      this.emit();
    } catch (err) {
      this.failKeepingState(err);
    }
  }

  /**
   * Rotate one player's trajectory. The angle snaps to the configured step
   * and all pending rotations are sent as a single joint what-if request.
   */
  async applyRotation(playerId: string, degrees: number): Promise<void> {
    const { frame, model } = this.state;
    if (!frame) throw new Error("no frame loaded");
    if (!frame.players.some((p) => p.id === playerId)) {
      throw new Error(`unknown player ${playerId}`);
    }
    const snapped = this.snapToStep(degrees);
    const prior = snapshotOf(this.state);
    const rotations = { ...this.state.rotations };
    if (snapped === 0) delete rotations[playerId];
    else rotations[playerId] = snapped;

    const seq = ++this.requestSeq;
    try {
      const result = await this.api.whatIf(
        model,
        frame,
        Object.entries(rotations).map(([player_id, deg]) => ({ player_id, degrees: deg })),
      );
      if (seq !== this.requestSeq) return;
      this.undoStack.push(prior);
      this.applyWhatIf(rotations, result);
    } catch (err) {
      this.failKeepingState(err);
    }
  }

  /** Sweep one player's rotation dial; results are cached per player. */
  async runSweep(playerId: string): Promise<SweepResult> {
    const { frame, model, rotations } = this.state;
    if (!frame) throw new Error("no frame loaded");
    const cached = this.sweepCache.get(playerId);
    if (cached) return cached;
    const result = await this.api.whatIf(
      model,
      frame,
      Object.entries(rotations)
        .filter(([pid]) => pid !== playerId)
        .map(([player_id, deg]) => ({ player_id, degrees: deg })),
      { player_id: playerId, step: this.stepDegrees },
    );
    if (!result.sweep) throw new Error("service omitted sweep");
    const sweep: SweepResult = {
      playerId,
      points: result.sweep.points,
      bestDegrees: result.sweep.best_degrees,
      bestProbability: result.sweep.best_probability,
    };
    this.sweepCache.set(playerId, sweep);
    this.lastError = null;
    return sweep;
  }

  /** Probabilities for the current frame from every registered model. */
  async compareModels(): Promise<Prediction[]> {
    const { frame } = this.state;
    if (!frame) throw new Error("no frame loaded");
    const body = await this.api.predictAll(frame);
    this.lastError = null;
    return body.predictions;
  }

  /** Restore the exact prior session state. */
  undo(): boolean {
    const prior = this.undoStack.pop();
    if (!prior) return false;
    this.state = prior;
    this.sweepCache.clear();
    this.lastError = null;
    this.emit();
    return true;
  }

  snapToStep(degrees: number): number {
    const snapped = Math.round(degrees / this.stepDegrees) * this.stepDegrees;
    // Normalize to (-180, 180] so dial wrap-around stays canonical.
    let d = snapped % 360;
    if (d > 180) d -= 360;
    if (d <= -180) d += 360;
    return d;
  }

  private applyWhatIf(rotations: Record<string, number>, result: WhatIfResponse): void {
    this.state = {
      ...this.state,
      rotations,
      baseProbability: result.base_probability,
      liveProbability: result.new_probability,
      deltaPercentagePoints: result.delta_percentage_points,
      modelVersion: result.version,
    };
    this.sweepCache.clear();
    this.lastError = null;
    this.emit();
  }

  private failKeepingState(err: unknown): void {
    this.lastError =
      err instanceof ApiError
        ? err
        : new ApiError(0, { code: "client_error", message: String(err) });
    this.emit(); // state untouched: listeners re-render the prior snapshot
  }
}
