// CSV export of pinned candidates, schema-identical to the CLI sample CSV
// so an exported row feeds straight back into `linksynth evaluate`.

import { CardModel } from "./gallery.js";
import { TargetSelection } from "./types.js";

export const CSV_HEADER = "l2,l3,l4,ee_x,ee_y,d_t,eta_t,d_r,eta_r";

export function exportCsv(pinned: CardModel[], selection: TargetSelection): string {
  const lines = [CSV_HEADER];
  for (const model of pinned) {
    const { linkage, d_r, eta_r } = model.candidate;
    const cells = [
      linkage.l2,
      linkage.l3,
      linkage.l4,
      linkage.ee_x,
      linkage.ee_y,
      selection.d_t,
      selection.eta_t,
    ].map(String);
    cells.push(d_r === null ? "" : String(d_r));
    cells.push(eta_r === null ? "" : String(eta_r));
    lines.push(cells.join(","));
  }
  return lines.join("\n") + "\n";
}

export function downloadCsv(content: string, filename = "linksynth-selection.csv"): void {
  const blob = new Blob([content], { type: "text/csv" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}
