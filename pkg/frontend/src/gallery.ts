// Candidate cards: one per synthesized mechanism, sorted by combined
// condition error, with target-vs-actual badges and pin/compare toggles.

import { Candidate, TargetSelection } from "./types.js";

export interface CardModel {
  candidate: Candidate;
  deltaD: number | null;
  deltaEta: number | null;
  combinedError: number;
  pinned: boolean;
  compared: boolean;
}

export function buildCardModels(candidates: Candidate[], selection: TargetSelection): CardModel[] {
  const models = candidates.map((candidate) => {
    const deltaD = candidate.d_r === null ? null : candidate.d_r - selection.d_t;
    const deltaEta = candidate.eta_r === null ? null : candidate.eta_r - selection.eta_t;
    const combinedError =
      deltaD === null || deltaEta === null
        ? Number.POSITIVE_INFINITY
        : Math.abs(deltaD) + Math.abs(deltaEta);
    return { candidate, deltaD, deltaEta, combinedError, pinned: false, compared: false };
  });
  models.sort((a, b) => a.combinedError - b.combinedError);
  return models;
}

const FIELD_LABELS: [keyof Candidate["linkage"], string][] = [
  ["l2", "crank l2"],
  ["l3", "coupler l3"],
  ["l4", "rocker l4"],
  ["ee_x", "EE x"],
  ["ee_y", "EE y"],
];

export function renderCard(
  model: CardModel,
  onSelect: (model: CardModel) => void,
  onPin: (model: CardModel) => void,
): HTMLElement {
  const card = document.createElement("div");
  card.className = "card" + (model.candidate.valid ? "" : " invalid");

  const header = document.createElement("div");
  header.className = "card-header";
  // exact service values; the delta badges carry the human-readable rounding
  const dr = document.createElement("span");
  dr.className = "card-dr";
  dr.textContent = model.candidate.d_r === null ? "-" : String(model.candidate.d_r);
  const etar = document.createElement("span");
  etar.className = "card-etar";
  etar.textContent = model.candidate.eta_r === null ? "-" : String(model.candidate.eta_r);
  header.append("d_r=", dr, " η_r=", etar);
  card.appendChild(header);

  const badges = document.createElement("div");
  badges.className = "card-badges";
  badges.appendChild(badge("Δd", model.deltaD));
  badges.appendChild(badge("Δη", model.deltaEta));
  if (!model.candidate.valid) {
    const bad = document.createElement("span");
    bad.className = "badge badge-invalid";
    bad.textContent = "invalid";
    badges.appendChild(bad);
  }
  card.appendChild(badges);

  const fields = document.createElement("dl");
  fields.className = "card-fields";
  for (const [key, label] of FIELD_LABELS) {
    const dt = document.createElement("dt");
    dt.textContent = label;
    const dd = document.createElement("dd");
    dd.textContent = model.candidate.linkage[key].toFixed(4);
    fields.append(dt, dd);
  }
  card.appendChild(fields);

  const pin = document.createElement("button");
  pin.className = "pin-button" + (model.pinned ? " pinned" : "");
  pin.textContent = model.pinned ? "unpin" : "pin";
  pin.addEventListener("click", (ev) => {
    ev.stopPropagation();
    onPin(model);
  });
  card.appendChild(pin);

  card.addEventListener("click", () => onSelect(model));
  return card;
}

function badge(label: string, value: number | null): HTMLElement {
  const el = document.createElement("span");
  el.className = "badge";
  if (value === null) {
    el.textContent = `${label}: n/a`;
  } else {
    el.textContent = `${label}: ${value >= 0 ? "+" : ""}${value.toFixed(3)}`;
    el.classList.add(Math.abs(value) < 0.25 ? "badge-good" : "badge-off");
  }
  return el;
}

export function renderGallery(
  container: HTMLElement,
  models: CardModel[],
  onSelect: (model: CardModel) => void,
  onPin: (model: CardModel) => void,
): void {
  container.textContent = "";
  for (const model of models) {
    container.appendChild(renderCard(model, onSelect, onPin));
  }
}
