// Linkage playback. All geometry comes from the service polylines (b, c,
// path); the client never solves kinematics, it only interpolates between
// served samples and draws.

import { Candidate, Point } from "./types.js";

/** getContext that tolerates canvas-less DOM implementations. */
export function context2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D | null {
  try {
    return canvas.getContext("2d");
  } catch {
    return null;
  }
}

/** Linear interpolation along a cyclic polyline sampled at uniform crank
 * angles; theta in radians, any real value. */
export function pointAtAngle(poly: Point[], theta: number): Point {
  const n = poly.length;
  const t = ((theta % (2 * Math.PI)) + 2 * Math.PI) % (2 * Math.PI);
  const pos = (t / (2 * Math.PI)) * n;
  const i = Math.floor(pos) % n;
  const j = (i + 1) % n;
  const frac = pos - Math.floor(pos);
  return [
    poly[i][0] + frac * (poly[j][0] - poly[i][0]),
    poly[i][1] + frac * (poly[j][1] - poly[i][1]),
  ];
}

/** World-to-canvas transform fitted to a bounding box, y flipped. */
export class Viewport {
  scale: number;
  ox: number;
  oy: number;

  constructor(points: Point[], width: number, height: number, margin = 20) {
    let xmin = 0, xmax = 1, ymin = 0, ymax = 0; // always include pivots A, D
    for (const [x, y] of points) {
      xmin = Math.min(xmin, x);
      xmax = Math.max(xmax, x);
      ymin = Math.min(ymin, y);
      ymax = Math.max(ymax, y);
    }
    const sx = (width - 2 * margin) / Math.max(xmax - xmin, 1e-9);
    const sy = (height - 2 * margin) / Math.max(ymax - ymin, 1e-9);
    this.scale = Math.min(sx, sy);
    this.ox = margin - xmin * this.scale + (width - 2 * margin - (xmax - xmin) * this.scale) / 2;
    this.oy = height - margin + ymin * this.scale - (height - 2 * margin - (ymax - ymin) * this.scale) / 2;
  }

  toScreen([x, y]: Point): Point {
    return [x * this.scale + this.ox, this.oy - y * this.scale];
  }
}

export interface PlaybackState {
  theta: number;
  speed: number; // crank revolutions per second; 0 freezes the frame
  running: boolean;
}

export class LinkageAnimator {
  private state: PlaybackState = { theta: 0, speed: 0.25, running: false };
  private viewport: Viewport | null = null;
  private candidate: Candidate | null = null;
  private lastTimestamp: number | null = null;
  private rafHandle = 0;

  constructor(
    private canvas: HTMLCanvasElement,
    private etaCanvas: HTMLCanvasElement,
  ) {}

  get playback(): PlaybackState {
    return this.state;
  }

  show(candidate: Candidate): void {
    this.candidate = candidate;
    this.state.theta = 0;
    this.lastTimestamp = null;
    const pts: Point[] = [
      ...(candidate.path ?? []),
      ...(candidate.b ?? []),
      ...(candidate.c ?? []),
    ];
    this.viewport = pts.length
      ? new Viewport(pts, this.canvas.width, this.canvas.height)
      : null;
    this.drawFrame();
    this.drawEtaStrip();
  }

  setSpeed(revPerSec: number): void {
    this.state.speed = revPerSec;
  }

  start(): void {
    if (this.state.running) return;
    this.state.running = true;
    this.lastTimestamp = null;
    const tick = (ts: number) => {
      if (!this.state.running) return;
      if (this.lastTimestamp !== null) {
        const dt = (ts - this.lastTimestamp) / 1000;
        this.state.theta += 2 * Math.PI * this.state.speed * dt;
      }
      this.lastTimestamp = ts;
      this.drawFrame();
      this.drawEtaStrip();
      this.rafHandle = requestAnimationFrame(tick);
    };
    this.rafHandle = requestAnimationFrame(tick);
  }

  pause(): void {
    this.state.running = false;
    cancelAnimationFrame(this.rafHandle);
  }

  rewind(): void {
    this.state.theta = 0;
    this.drawFrame();
    this.drawEtaStrip();
  }

  /** Current EE marker position in canvas pixels (used by tests). */
  markerScreenPosition(): Point | null {
    if (!this.candidate?.path || !this.viewport) return null;
    return this.viewport.toScreen(pointAtAngle(this.candidate.path, this.state.theta));
  }

  drawFrame(): void {
    const ctx = context2d(this.canvas);
    if (!ctx || !this.candidate?.valid || !this.viewport) return;
    const { path, b, c } = this.candidate;
    if (!path || !b || !c) return;
    const vp = this.viewport;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);

    // EE trace
    ctx.beginPath();
    for (let i = 0; i <= path.length; i++) {
      const [x, y] = vp.toScreen(path[i % path.length]);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.strokeStyle = "#9ecae1";
    ctx.lineWidth = 1.5;
    ctx.stroke();

    const theta = this.state.theta;
    const bNow = pointAtAngle(b, theta);
    const cNow = pointAtAngle(c, theta);
    const eeNow = pointAtAngle(path, theta);
    const a: Point = [0, 0];
    const d: Point = [1, 0];

    // links: frame, crank, coupler, rocker, EE arm
    drawSegment(ctx, vp, a, d, "#bbbbbb", 2);
    drawSegment(ctx, vp, a, bNow, "#d62728", 3);
    drawSegment(ctx, vp, bNow, cNow, "#2ca02c", 3);
    drawSegment(ctx, vp, cNow, d, "#1f77b4", 3);
    drawSegment(ctx, vp, bNow, eeNow, "#7f7f7f", 1.5);
    drawSegment(ctx, vp, cNow, eeNow, "#cccccc", 1);

    for (const [pt, color] of [
      [a, "#333333"],
      [d, "#333333"],
      [bNow, "#d62728"],
      [cNow, "#1f77b4"],
    ] as [Point, string][]) {
      drawDot(ctx, vp, pt, 4, color);
    }
    drawDot(ctx, vp, eeNow, 6, "#ff7f0e");
  }

  drawEtaStrip(): void {
    const ctx = context2d(this.etaCanvas);
    const profile = this.candidate?.eta_profile;
    if (!ctx || !profile || !this.candidate) return;
    const w = this.etaCanvas.width;
    const h = this.etaCanvas.height;
    ctx.clearRect(0, 0, w, h);
    const finite = profile.filter((v) => Number.isFinite(v));
    const top = Math.max(...finite) * 1.05 || 1;
    ctx.beginPath();
    for (let i = 0; i < profile.length; i++) {
      const x = (i / profile.length) * w;
      const y = h - (Math.min(profile[i], top) / top) * h;
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.strokeStyle = "#2ca02c";
    ctx.lineWidth = 1;
    ctx.stroke();

    // d_max split points, then the synchronized crank cursor
    for (const idx of this.candidate.split_indices ?? []) {
      const x = (idx / profile.length) * w;
      ctx.beginPath();
      ctx.arc(x, h - (Math.min(profile[idx], top) / top) * h, 3, 0, 2 * Math.PI);
      ctx.fillStyle = "#d62728";
      ctx.fill();
    }
    const t = ((this.state.theta % (2 * Math.PI)) + 2 * Math.PI) % (2 * Math.PI);
    const cx = (t / (2 * Math.PI)) * w;
    ctx.beginPath();
    ctx.moveTo(cx, 0);
    ctx.lineTo(cx, h);
    ctx.strokeStyle = "#ff7f0e";
    ctx.stroke();
  }
}

function drawSegment(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  p: Point,
  q: Point,
  color: string,
  width: number,
): void {
  const [x1, y1] = vp.toScreen(p);
  const [x2, y2] = vp.toScreen(q);
  ctx.beginPath();
  ctx.moveTo(x1, y1);
  ctx.lineTo(x2, y2);
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.stroke();
}

function drawDot(
  ctx: CanvasRenderingContext2D,
  vp: Viewport,
  p: Point,
  r: number,
  color: string,
): void {
  const [x, y] = vp.toScreen(p);
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  ctx.fillStyle = color;
  ctx.fill();
}
