/** DOM rendering.  Every number on screen comes verbatim from one API
 * response; elements carry the raw value in data-raw so tests can assert
 * exact fidelity independent of display formatting.
 */

import type { ImportanceEntry, PredictResponse, WhatIfResult } from "./types";
import type { FormState } from "./state";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

const LABELS: Record<string, string> = {
  manifest_xml: "Manifest XML (paste decoded AndroidManifest)",
};

function labelFor(name: string): string {
  return LABELS[name] ?? name.replace(/_/g, " ");
}

export function renderForm(
  state: FormState,
  container: HTMLElement,
  onChange: (name: string, value: string) => void,
): void {
  container.textContent = "";
  for (const attr of state.schema.attributes) {
    const row = el("div", "field");
    row.dataset.attribute = attr.name;
    const label = el("label", "field-label", labelFor(attr.name));
    label.htmlFor = `attr-${attr.name}`;
    row.appendChild(label);

    let input: HTMLElement;
    if (attr.kind === "category") {
      const select = el("select");
      select.appendChild(el("option", undefined, "(unset)")).setAttribute("value", "");
      for (const value of attr.values ?? []) {
        const option = el("option", undefined, value);
        option.value = value;
        select.appendChild(option);
      }
      select.addEventListener("change", () => onChange(attr.name, select.value));
      input = select;
    } else if (attr.kind === "binary") {
      const checkbox = el("input") as HTMLInputElement;
      checkbox.type = "checkbox";
      checkbox.addEventListener("change", () => onChange(attr.name, checkbox.checked ? "1" : "0"));
      input = checkbox;
    } else if (attr.name === "manifest_xml" || attr.name === "description") {
      const area = el("textarea") as HTMLTextAreaElement;
      area.rows = 3;
      area.addEventListener("change", () => onChange(attr.name, area.value));
      input = area;
    } else {
      const box = el("input") as HTMLInputElement;
      box.type = attr.kind === "number" ? "number" : attr.kind === "date" ? "date" : "text";
      box.addEventListener("change", () => onChange(attr.name, box.value));
      input = box;
    }
    input.id = `attr-${attr.name}`;
    row.appendChild(input);
    row.appendChild(el("span", "field-error"));
    container.appendChild(row);
  }
}

export function renderGauge(container: HTMLElement, response: PredictResponse): void {
  container.textContent = "";
  const pct = response.score * 100;
  const bar = el("div", "gauge-bar");
  const fill = el("div", `gauge-fill ${response.label === "Removed" ? "bad" : "good"}`);
  fill.style.width = `${pct.toFixed(1)}%`;
  bar.appendChild(fill);
  container.appendChild(bar);

  const value = el("span", "gauge-value", response.score.toFixed(4));
  value.dataset.raw = String(response.score);
  const badge = el("span", `badge ${response.label === "Removed" ? "bad" : "good"}`, response.label);
  const threshold = el("span", "gauge-threshold", `threshold ${response.threshold.toFixed(4)}`);
  threshold.dataset.raw = String(response.threshold);
  for (const node of [value, badge, threshold]) container.appendChild(node);
}

export function renderWhatIf(container: HTMLElement, results: WhatIfResult[]): void {
  container.textContent = "";
  if (results.length === 0) return;
  for (const result of results) {
    const row = el("div", "whatif-row");
    row.dataset.attribute = result.mutation.attribute;
    const describe =
      result.mutation.value === null ? "remove" : `set to ${String(result.mutation.value)}`;
    row.appendChild(el("span", "whatif-name", `${labelFor(result.mutation.attribute)}: ${describe}`));
    const score = el("span", "whatif-score", result.score.toFixed(4));
    score.dataset.raw = String(result.score);
    row.appendChild(score);
    const sign = result.delta > 0 ? "+" : "";
    const delta = el(
      "span",
      `whatif-delta ${result.delta < 0 ? "good" : result.delta > 0 ? "bad" : ""}`,
      `${sign}${result.delta.toFixed(4)}`,
    );
    delta.dataset.raw = String(result.delta);
    row.appendChild(delta);
    container.appendChild(row);
  }
}

export function renderImportance(container: HTMLElement, entries: ImportanceEntry[]): void {
  container.textContent = "";
  const top = entries.slice(0, 20);
  const max = top.length > 0 && top[0] ? top[0].score : 0;
  for (const entry of top) {
    const row = el("div", "imp-row");
    row.appendChild(el("span", "imp-name", entry.feature));
    const track = el("div", "imp-track");
    const bar = el("div", "imp-bar");
    bar.style.width = max > 0 ? `${((entry.score / max) * 100).toFixed(1)}%` : "0%";
    track.appendChild(bar);
    row.appendChild(track);
    const value = el("span", "imp-value", entry.score.toFixed(4));
    value.dataset.raw = String(entry.score);
    row.appendChild(value);
    container.appendChild(row);
  }
}

export function renderBanner(container: HTMLElement, message: string, onRetry: () => void): void {
  container.textContent = "";
  const banner = el("div", "banner", message + " ");
  const button = el("button", "retry", "Retry");
  button.addEventListener("click", onRetry);
  banner.appendChild(button);
  container.appendChild(banner);
}

export function clearBanner(container: HTMLElement): void {
  container.textContent = "";
}

export function showFieldError(form: HTMLElement, attribute: string, message: string): void {
  const row = form.querySelector<HTMLElement>(`[data-attribute="${attribute}"] .field-error`);
  if (row) row.textContent = message;
}

export function clearFieldErrors(form: HTMLElement): void {
  for (const node of form.querySelectorAll(".field-error")) node.textContent = "";
}
