/**
 * Pitch rendering split in two: a pure scene builder (frame + pending
 * rotations -> draw primitives) that unit tests cover, and a thin canvas
 * painter that walks those primitives.
 */

import { FramePayload } from "./api.js";

export const PITCH_LENGTH = 105;
export const PITCH_WIDTH = 68;

/** Seconds of travel represented by a velocity arrow. */
const ARROW_SECONDS = 1.0;

export interface Glyph {
  kind: "player" | "ball";
  id: string;
  team?: "home" | "away";
  x: number;
  y: number;
  selected: boolean;
}

export interface Arrow {
  playerId: string;
  x: number;
  y: number;
  dx: number;
  dy: number;
  style: "solid" | "faint";
}

export interface Scene {
  glyphs: Glyph[];
  arrows: Arrow[];
}

export function rotateVector(vx: number, vy: number, degrees: number): [number, number] {
  const rad = (degrees * Math.PI) / 180;
  const cos = Math.cos(rad);
  const sin = Math.sin(rad);
  return [vx * cos - vy * sin, vx * sin + vy * cos];
}

/**
 * Build the draw list. Players with a pending rotation get two arrows:
 * the faint original trajectory plus the solid rotated one.
 */
export function buildScene(
  frame: FramePayload | null,
  rotations: Record<string, number>,
  selectedPlayerId: string | null = null,
): Scene {
  if (!frame) return { glyphs: [], arrows: [] };
  const glyphs: Glyph[] = [];
  const arrows: Arrow[] = [];
  for (const p of frame.players) {
    glyphs.push({
      kind: "player",
      id: p.id,
      team: p.team,
      x: p.x,
      y: p.y,
      selected: p.id === selectedPlayerId,
    });
    const moving = p.vx !== 0 || p.vy !== 0;
    if (!moving) continue;
    const pending = rotations[p.id];
    if (pending !== undefined && pending !== 0) {
      arrows.push({
        playerId: p.id,
        x: p.x,
        y: p.y,
        dx: p.vx * ARROW_SECONDS,
        dy: p.vy * ARROW_SECONDS,
        style: "faint",
      });
      const [rvx, rvy] = rotateVector(p.vx, p.vy, pending);
      arrows.push({
        playerId: p.id,
        x: p.x,
        y: p.y,
        dx: rvx * ARROW_SECONDS,
        dy: rvy * ARROW_SECONDS,
        style: "solid",
      });
    } else {
      arrows.push({
        playerId: p.id,
        x: p.x,
        y: p.y,
        dx: p.vx * ARROW_SECONDS,
        dy: p.vy * ARROW_SECONDS,
        style: "solid",
      });
    }
  }
  glyphs.push({
    kind: "ball",
    id: "ball",
    x: frame.ball.x,
    y: frame.ball.y,
    selected: false,
  });
  return { glyphs, arrows };
}

const TEAM_COLORS = { home: "#1d72b8", away: "#c0392b" } as const;

export function drawScene(
  ctx: CanvasRenderingContext2D,
  scene: Scene,
  widthPx: number,
  heightPx: number,
): void {
  const sx = widthPx / PITCH_LENGTH;
  const sy = heightPx / PITCH_WIDTH;

  ctx.clearRect(0, 0, widthPx, heightPx);
  ctx.fillStyle = "#2e7d32";
  ctx.fillRect(0, 0, widthPx, heightPx);
  ctx.strokeStyle = "rgba(255,255,255,0.8)";
  ctx.lineWidth = 1.5;
  ctx.strokeRect(0, 0, widthPx, heightPx);
  ctx.beginPath();
  ctx.moveTo(widthPx / 2, 0);
  ctx.lineTo(widthPx / 2, heightPx);
  ctx.stroke();

  for (const arrow of scene.arrows) {
    ctx.strokeStyle = arrow.style === "faint" ? "rgba(255,255,255,0.3)" : "#ffffff";
    ctx.lineWidth = arrow.style === "faint" ? 1 : 2;
    const x0 = arrow.x * sx;
    const y0 = arrow.y * sy;
    const x1 = (arrow.x + arrow.dx) * sx;
    const y1 = (arrow.y + arrow.dy) * sy;
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
    const angle = Math.atan2(y1 - y0, x1 - x0);
    ctx.beginPath();
    ctx.moveTo(x1, y1);
    ctx.lineTo(x1 - 6 * Math.cos(angle - 0.4), y1 - 6 * Math.sin(angle - 0.4));
    ctx.moveTo(x1, y1);
    ctx.lineTo(x1 - 6 * Math.cos(angle + 0.4), y1 - 6 * Math.sin(angle + 0.4));
    ctx.stroke();
  }

  for (const glyph of scene.glyphs) {
    const x = glyph.x * sx;
    const y = glyph.y * sy;
    ctx.beginPath();
    if (glyph.kind === "ball") {
      ctx.fillStyle = "#f5f5f5";
      ctx.arc(x, y, 4, 0, 2 * Math.PI);
      ctx.fill();
      ctx.strokeStyle = "#111";
      ctx.stroke();
    } else {
      ctx.fillStyle = TEAM_COLORS[glyph.team ?? "home"];
      ctx.arc(x, y, 7, 0, 2 * Math.PI);
      ctx.fill();
      if (glyph.selected) {
        ctx.strokeStyle = "#ffd600";
        ctx.lineWidth = 3;
        ctx.stroke();
      }
      ctx.fillStyle = "#fff";
      ctx.font = "9px sans-serif";
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      ctx.fillText(glyph.id.slice(0, 3), x, y);
    }
  }
}
