// App wiring: target selection (sliders + scatter click) -> synthesize ->
// gallery -> detail animation; pinned cards export to CSV. State lives in
// this module per session; in-flight requests are cancelled when a newer
// selection fires.

import { HttpServiceClient, ApiError, ServiceClient } from "./api.js";
import { LinkageAnimator } from "./animate.js";
import { createConditionSpace, ConditionSpaceView } from "./condition-space.js";
import { exportCsv, downloadCsv } from "./export.js";
import { buildCardModels, renderGallery, CardModel } from "./gallery.js";
import { TargetSelection } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function startApp(client: ServiceClient = new HttpServiceClient()): void {
  const dSlider = el<HTMLInputElement>("d-slider");
  const etaSlider = el<HTMLInputElement>("eta-slider");
  const dValue = el<HTMLElement>("d-value");
  const etaValue = el<HTMLElement>("eta-value");
  const nInput = el<HTMLInputElement>("n-input");
  const seedInput = el<HTMLInputElement>("seed-input");
  const requestButton = el<HTMLButtonElement>("request-button");
  const exportButton = el<HTMLButtonElement>("export-button");
  const statusLine = el<HTMLElement>("status-line");
  const hullBadge = el<HTMLElement>("hull-badge");
  const galleryEl = el<HTMLElement>("gallery");

  const animator = new LinkageAnimator(
    el<HTMLCanvasElement>("linkage-canvas"),
    el<HTMLCanvasElement>("eta-canvas"),
  );
  el<HTMLButtonElement>("play-button").addEventListener("click", () => animator.start());
  el<HTMLButtonElement>("pause-button").addEventListener("click", () => animator.pause());
  el<HTMLButtonElement>("rewind-button").addEventListener("click", () => animator.rewind());
  el<HTMLInputElement>("speed-slider").addEventListener("input", (ev) => {
    animator.setSpeed(Number((ev.target as HTMLInputElement).value));
  });

  let space: ConditionSpaceView | null = null;
  let models: CardModel[] = [];
  let inFlight: AbortController | null = null;
  let requestToken = 0;

  const selection = (): TargetSelection => ({
    d_t: Number(dSlider.value),
    eta_t: Number(etaSlider.value),
    n: Number(nInput.value),
    seed: Number(seedInput.value),
  });

  function syncTargetDisplays(): void {
    const sel = selection();
    dValue.textContent = sel.d_t.toFixed(2);
    etaValue.textContent = sel.eta_t.toFixed(2);
    space?.setTarget(sel.d_t, sel.eta_t);
    hullBadge.hidden = !space?.isOutOfHull(sel.d_t, sel.eta_t);
  }

  function syncExportButton(): void {
    exportButton.disabled = !models.some((m) => m.pinned);
  }

  function onPin(model: CardModel): void {
    model.pinned = !model.pinned;
    redrawGallery();
  }

  function onSelect(model: CardModel): void {
    if (model.candidate.valid) animator.show(model.candidate);
  }

  function redrawGallery(): void {
    renderGallery(galleryEl, models, onSelect, onPin);
    syncExportButton();
  }

  dSlider.addEventListener("input", syncTargetDisplays);
  etaSlider.addEventListener("input", syncTargetDisplays);

  requestButton.addEventListener("click", async () => {
    const sel = selection();
    inFlight?.abort();
    inFlight = new AbortController();
    const token = ++requestToken;
    statusLine.textContent = "synthesizing...";
    try {
      const resp = await client.synthesize(sel, inFlight.signal);
      if (token !== requestToken) return; // a newer selection superseded us
      models = buildCardModels(resp.candidates, sel);
      redrawGallery();
      statusLine.textContent = resp.warning ?? `${resp.candidates.length} candidates`;
      const firstValid = models.find((m) => m.candidate.valid);
      if (firstValid) animator.show(firstValid.candidate);
    } catch (err) {
      if (err instanceof DOMException && err.name === "AbortError") return;
      if (token !== requestToken) return;
      // leave the gallery as is; surface the error inline
      statusLine.textContent = err instanceof ApiError ? `error: ${err.message}` : String(err);
    }
  });

  exportButton.addEventListener("click", () => {
    downloadCsv(exportCsv(models.filter((m) => m.pinned), selection()));
  });

  client
    .datasetStats()
    .then((stats) => {
      const canvas = el<HTMLCanvasElement>("space-canvas");
      space = createConditionSpace(canvas, stats, (d, eta) => {
        dSlider.value = String(d);
        etaSlider.value = String(eta);
        syncTargetDisplays();
      });
      dSlider.min = String(stats.min.d_max);
      dSlider.max = String(stats.max.d_max);
      etaSlider.min = String(stats.min.eta_min);
      etaSlider.max = String(stats.max.eta_min);
      syncTargetDisplays();
    })
    .catch(() => {
      statusLine.textContent = "dataset stats unavailable; sliders unbounded";
    });

  syncTargetDisplays();
  syncExportButton();
}

if (typeof window !== "undefined" && document.getElementById("gallery")) {
  startApp();
}
