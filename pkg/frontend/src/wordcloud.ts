/**
 * Word-cloud panel: font size proportional to the descriptor's relative
 * weight (the API rescales so the top descriptor has weight 1.0). The flow
 * layout is insertion-ordered, so a fixed input renders identically on every
 * run.
 */

import type { WordcloudRow } from "./types.js";

export const MIN_FONT_PX = 12;
export const MAX_FONT_PX = 40;

export function fontSizeFor(weight: number): number {
  const clamped = Math.min(1, Math.max(0, weight));
  return MIN_FONT_PX + (MAX_FONT_PX - MIN_FONT_PX) * clamped;
}

export function renderWordcloud(
  container: HTMLElement,
  rows: WordcloudRow[],
  onSelect?: (name: string) => void,
): void {
  container.textContent = "";
  container.classList.add("wordcloud");
  if (!rows.length) {
    const placeholder = document.createElement("p");
    placeholder.className = "placeholder";
    placeholder.textContent = "No descriptor profile available for this author.";
    container.appendChild(placeholder);
    return;
  }
  for (const row of rows) {
    const span = document.createElement("span");
    span.className = "cloud-word";
    span.textContent = row.name;
    span.style.fontSize = `${fontSizeFor(row.weight)}px`;
    span.title = `weight ${row.weight.toFixed(3)}`;
    if (onSelect) {
      span.addEventListener("click", () => onSelect(row.name));
    }
    container.appendChild(span);
  }
}
