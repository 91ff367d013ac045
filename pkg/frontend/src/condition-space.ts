// The condition-space backdrop: density of the training corpus over
// (d_max, eta_min), with a crosshair for the current target. Clicking
// picks a target; out-of-hull picks get flagged, not blocked.

import { context2d } from "./animate.js";
import { DatasetStats } from "./types.js";

export interface ConditionSpaceView {
  setTarget(d: number, eta: number): void;
  isOutOfHull(d: number, eta: number): boolean;
  clientToConditions(px: number, py: number): [number, number];
  conditionsToClient(d: number, eta: number): [number, number];
  redraw(): void;
}

export function createConditionSpace(
  canvas: HTMLCanvasElement,
  stats: DatasetStats,
  onPick: (d: number, eta: number) => void,
): ConditionSpaceView {
  const dLo = stats.d_edges[0];
  const dHi = stats.d_edges[stats.d_edges.length - 1];
  const eLo = stats.eta_edges[0];
  const eHi = stats.eta_edges[stats.eta_edges.length - 1];
  let target: [number, number] = [(dLo + dHi) / 2, (eLo + eHi) / 2];

  const view: ConditionSpaceView = {
    setTarget(d, eta) {
      target = [d, eta];
      view.redraw();
    },
    isOutOfHull(d, eta) {
      return d < stats.min.d_max || d > stats.max.d_max || eta < stats.min.eta_min || eta > stats.max.eta_min;
    },
    clientToConditions(px, py) {
      const d = dLo + (px / canvas.width) * (dHi - dLo);
      const eta = eLo + ((canvas.height - py) / canvas.height) * (eHi - eLo);
      return [d, eta];
    },
    conditionsToClient(d, eta) {
      const px = ((d - dLo) / (dHi - dLo)) * canvas.width;
      const py = canvas.height - ((eta - eLo) / (eHi - eLo)) * canvas.height;
      return [px, py];
    },
    redraw() {
      const ctx = context2d(canvas);
      if (!ctx) return;
      ctx.clearRect(0, 0, canvas.width, canvas.height);
      const nb = stats.counts.length;
      const peak = Math.max(1, ...stats.counts.map((row) => Math.max(...row)));
      const cw = canvas.width / nb;
      const ch = canvas.height / stats.counts[0].length;
      for (let i = 0; i < nb; i++) {
        for (let j = 0; j < stats.counts[i].length; j++) {
          const count = stats.counts[i][j];
          if (count === 0) continue;
          const shade = Math.sqrt(count / peak);
          ctx.fillStyle = `rgba(31, 119, 180, ${0.15 + 0.85 * shade})`;
          ctx.fillRect(i * cw, canvas.height - (j + 1) * ch, cw, ch);
        }
      }
      const [px, py] = view.conditionsToClient(target[0], target[1]);
      ctx.strokeStyle = view.isOutOfHull(target[0], target[1]) ? "#d62728" : "#ff7f0e";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.moveTo(px - 8, py);
      ctx.lineTo(px + 8, py);
      ctx.moveTo(px, py - 8);
      ctx.lineTo(px, py + 8);
      ctx.stroke();
    },
  };

  canvas.addEventListener("click", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const [d, eta] = view.clientToConditions(ev.clientX - rect.left, ev.clientY - rect.top);
    onPick(d, eta);
  });

  view.redraw();
  return view;
}
