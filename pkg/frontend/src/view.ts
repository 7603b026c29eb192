// Thin DOM layer: render the controller state, wire events back into it.

import { SessionController, UiState } from "./controller";
import {
  ALL_SUBLABELS,
  PRIMARIES,
  Primary,
  SUBLABEL_TITLES,
  enabledSublabels,
  formatKappa,
} from "./model";

const PRIMARY_TITLES: Record<Primary, string> = {
  AntiTrans: "Anti-Trans",
  ProTrans: "Pro-Trans",
  Neutral: "Neutral",
};

function esc(text: string): string {
  const div = document.createElement("div");
  div.textContent = text;
  return div.innerHTML;
}

export function render(root: HTMLElement, state: UiState, controller: SessionController): void {
  root.innerHTML = `
    <div class="warning-banner">
      Content warning: samples may contain hostile and dehumanizing language.
      Pace yourself and step away whenever you need to.
    </div>
    ${state.retryBanner !== null ? retryBanner(state) : ""}
    ${state.breakSuggested ? breakBanner() : ""}
    ${body(state)}
  `;
  wire(root, state, controller);
}

function retryBanner(state: UiState): string {
  return `
    <div class="retry-banner">
      Connection problem: ${esc(state.retryBanner ?? "")} — nothing was lost.
      <button id="retry-btn">Retry</button>
    </div>`;
}

function breakBanner(): string {
  return `
    <div class="break-banner">
      You have labeled a lot this session. Consider a break before continuing.
      <button id="break-dismiss">Keep going</button>
    </div>`;
}

function body(state: UiState): string {
  switch (state.phase) {
    case "enter-id":
      return `
        <section class="enter-id">
          <h1>Annotation session</h1>
          <label>Annotator id <input id="annotator-input" autocomplete="off"></label>
          <button id="start-btn">Start</button>
          ${inlineError(state)}
        </section>`;
    case "loading":
      return `<section class="loading">Loading next task…</section>`;
    case "fatal":
      return `<section class="fatal">Cannot start session: ${esc(state.fatalError ?? "")}</section>`;
    case "done":
      return `
        <section class="done">
          <h1>All tasks complete</h1>
          ${agreementPanel(state)}
          ${progressPanel(state)}
        </section>`;
    case "labeling":
      return `
        <div class="layout">
          <main class="content-panel">
            <h2>Sample ${esc(state.task?.post_id ?? "")}</h2>
            <pre class="sample-text">${esc(state.task?.display_text ?? "")}</pre>
            ${labelControls(state)}
            ${inlineError(state)}
          </main>
          <aside class="side-panel">
            ${agreementPanel(state)}
            ${progressPanel(state)}
            ${codebookPanel(state)}
          </aside>
        </div>`;
  }
}

function inlineError(state: UiState): string {
  return state.inlineError ? `<p class="inline-error">${esc(state.inlineError)}</p>` : "";
}

function labelControls(state: UiState): string {
  const enabled = new Set(enabledSublabels(state.primary));
  const primaries = PRIMARIES.map(
    (p) => `
      <label class="primary-choice">
        <input type="radio" name="primary" value="${p}" ${state.primary === p ? "checked" : ""}>
        ${PRIMARY_TITLES[p]}
      </label>`,
  ).join("");
  const sublabels = ALL_SUBLABELS.map((s) => {
    const disabled = !enabled.has(s);
    return `
      <label class="sublabel-choice ${disabled ? "disabled" : ""}" title="${esc(SUBLABEL_TITLES[s])}">
        <input type="checkbox" value="${s}" ${disabled ? "disabled" : ""}
               ${state.sublabels.has(s) ? "checked" : ""}>
        ${s}
      </label>`;
  }).join("");
  return `
    <fieldset class="primaries"><legend>Primary stance</legend>${primaries}</fieldset>
    <fieldset class="sublabels"><legend>Sublabels (optional)</legend>${sublabels}</fieldset>
    <div class="actions">
      <button id="submit-btn" ${state.submitting ? "disabled" : ""}>Submit and next</button>
      <button id="skip-btn">Skip…</button>
    </div>`;
}

function agreementPanel(state: UiState): string {
  const a = state.agreement;
  if (!a) return "";
  const reference =
    a.reference_kappa !== null
      ? `<div class="reference">reference: ${a.reference_kappa.toFixed(2)}</div>`
      : "";
  return `
    <section class="agreement-panel">
      <h3>Live agreement</h3>
      <div class="kappa" data-kappa="${a.kappa ?? "undefined"}">κ = ${formatKappa(a.kappa)}</div>
      <div>doubly labeled: ${a.n}</div>
      ${a.note ? `<div class="note">${esc(a.note)}</div>` : ""}
      ${reference}
    </section>`;
}

function progressPanel(state: UiState): string {
  const p = state.progress;
  if (!p) return "";
  const rows = Object.entries(p.annotators)
    .map(
      ([name, row]) =>
        `<tr><td>${esc(name)}</td><td>${row.labeled}</td><td>${row.skipped}</td><td>${row.pending}</td></tr>`,
    )
    .join("");
  return `
    <section class="progress-panel">
      <h3>Progress</h3>
      <table>
        <thead><tr><th>annotator</th><th>labeled</th><th>skipped</th><th>pending</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
    </section>`;
}

function codebookPanel(state: UiState): string {
  const cb = state.codebook;
  if (!cb) return "";
  const items = cb.definitions
    .map(
      (d) => `
      <details class="codebook-entry side-${d.side}">
        <summary>${esc(d.id)}${d.sublabel ? "" : " (primary guidance)"}</summary>
        <p>${esc(d.definition)}</p>
      </details>`,
    )
    .join("");
  return `
    <section class="codebook-panel">
      <h3>Codebook ${esc(cb.version)}</h3>
      ${items}
    </section>`;
}

function wire(root: HTMLElement, state: UiState, controller: SessionController): void {
  root.querySelector<HTMLButtonElement>("#start-btn")?.addEventListener("click", () => {
    const input = root.querySelector<HTMLInputElement>("#annotator-input");
    void controller.start(input?.value ?? "");
  });
  root.querySelector<HTMLInputElement>("#annotator-input")?.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") {
      void controller.start((ev.target as HTMLInputElement).value);
    }
  });
  root.querySelectorAll<HTMLInputElement>("input[name=primary]").forEach((radio) => {
    radio.addEventListener("change", () => controller.selectPrimary(radio.value as Primary));
  });
  root.querySelectorAll<HTMLInputElement>(".sublabels input[type=checkbox]").forEach((box) => {
    box.addEventListener("change", () => controller.toggleSublabel(box.value));
  });
  root.querySelector<HTMLButtonElement>("#submit-btn")?.addEventListener("click", () => {
    void controller.submitAndAdvance();
  });
  root.querySelector<HTMLButtonElement>("#skip-btn")?.addEventListener("click", () => {
    const reason = window.prompt("Why skip this sample?") ?? "";
    if (reason) void controller.skipCurrent(reason);
  });
  root.querySelector<HTMLButtonElement>("#retry-btn")?.addEventListener("click", () => {
    void controller.retry();
  });
  root.querySelector<HTMLButtonElement>("#break-dismiss")?.addEventListener("click", () => {
    controller.dismissBreak();
  });
}
