/** Pure HTML renderers over the view state. No DOM access here; main.ts
 * owns the document and event wiring, which keeps all of this testable
 * as plain string functions.
 */

import {
  CitanceRow,
  ContextKind,
  Granularity,
  HIT_LIMIT,
  PanelPayload,
  RetrievalModel,
  Setup,
} from "./model.js";
import { ViewState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function citanceLookup(citances: CitanceRow[]): Map<string, CitanceRow> {
  const index = new Map<string, CitanceRow>();
  for (const c of citances) index.set(`${c.para_id}:${c.sent_index}`, c);
  return index;
}

function renderParagraph(
  para: { para_id: string; sentences: { sent_index: number; text: string }[] },
  marks: Map<string, CitanceRow>,
  selected: string | null,
): string {
  const parts = para.sentences.map((s) => {
    const citance = marks.get(`${para.para_id}:${s.sent_index}`);
    if (!citance) return escapeHtml(s.text);
    const cls = citance.citance_id === selected ? "citance selected" : "citance";
    return (
      `<mark class="${cls}" data-citance-id="${escapeHtml(citance.citance_id)}">` +
      escapeHtml(s.text) +
      "</mark>"
    );
  });
  return `<p data-para-id="${escapeHtml(para.para_id)}">${parts.join(" ")}</p>`;
}

export function renderDocument(state: ViewState): string {
  if (state.notFound) {
    return `<div class="notfound">Paper not found: ${escapeHtml(state.paperId ?? "")}</div>`;
  }
  if (state.loadingPaper) {
    return `<div class="loading">Loading ${escapeHtml(state.paperId ?? "")}…</div>`;
  }
  if (state.error && !state.paper) {
    return `<div class="error">${escapeHtml(state.error.message)}</div>`;
  }
  const paper = state.paper;
  if (!paper) return `<div class="empty">No paper loaded.</div>`;

  const marks = citanceLookup(state.citances);
  const pieces: string[] = [`<h1>${escapeHtml(paper.title)}</h1>`];
  if (state.citances.length === 0) {
    pieces.push(`<p class="no-citances">This paper contains no detected citances.</p>`);
  }
  if (paper.abstract_paragraphs.length > 0) {
    pieces.push(`<section class="abstract"><h2>Abstract</h2>`);
    for (const para of paper.abstract_paragraphs) {
      pieces.push(renderParagraph(para, marks, state.selectedCitance));
    }
    pieces.push("</section>");
  }
  for (const section of paper.body_sections) {
    pieces.push(`<section class="body-section"><h2>${escapeHtml(section.section)}</h2>`);
    for (const para of section.paragraphs) {
      pieces.push(renderParagraph(para, marks, state.selectedCitance));
    }
    pieces.push("</section>");
  }
  return pieces.join("\n");
}

function option(value: string, label: string, current: string): string {
  const sel = value === current ? " selected" : "";
  return `<option value="${value}"${sel}>${label}</option>`;
}

function renderControls(setup: Setup): string {
  const contexts: [ContextKind, string][] = [
    ["citance", "citance only"],
    ["neighbors", "with neighbors"],
    ["similar", "with similar sentences"],
  ];
  const models: [RetrievalModel, string][] = [
    ["bm25", "lexical (BM25)"],
    ["dense", "dense"],
  ];
  const granularities: [Granularity, string][] = [
    ["sentence", "top sentences"],
    ["paragraph", "top paragraphs"],
  ];
  return [
    `<div class="controls">`,
    `<select data-setup="contextKind">`,
    ...contexts.map(([v, l]) => option(v, l, setup.contextKind)),
    `</select>`,
    `<select data-setup="model">`,
    ...models.map(([v, l]) => option(v, l, setup.model)),
    `</select>`,
    `<select data-setup="granularity">`,
    ...granularities.map(([v, l]) => option(v, l, setup.granularity)),
    `</select>`,
    `<label><input type="checkbox" data-setup="useKeywords"${setup.useKeywords ? " checked" : ""}> keyword queries</label>`,
    `</div>`,
  ].join("");
}

function renderHits(panel: PanelPayload): string {
  const limit = HIT_LIMIT[panel.setup.granularity];
  const rows = panel.hits.slice(0, limit).map(
    (hit) =>
      `<li data-unit-id="${escapeHtml(hit.unit_id)}">` +
      `<span class="score">${hit.score.toFixed(3)}</span> ${escapeHtml(hit.text)}</li>`,
  );
  return `<ol class="hits">${rows.join("")}</ol>`;
}

function renderPanelBody(panel: PanelPayload): string {
  const pieces: string[] = [];
  pieces.push(`<blockquote class="citance-text">${escapeHtml(panel.citance.text)}</blockquote>`);
  if (!panel.target_available) {
    const reason = panel.error ? panel.error.message : "cited paper unavailable";
    pieces.push(
      `<div class="target-missing">No full text for ` +
        `<code>${escapeHtml(panel.target_paper_id)}</code>: ${escapeHtml(reason)}</div>`,
    );
    return pieces.join("\n");
  }
  const abstract = panel.abstract
    .map((text) => `<p>${escapeHtml(text)}</p>`)
    .join("");
  const summaryText = panel.summary ? panel.summary.text : "";
  const cacheBadge = panel.cache_hit ? `<span class="badge cached">cached</span>` : "";
  pieces.push(
    `<div class="compare">`,
    `<section class="pane abstract-pane"><h3>Abstract of ${escapeHtml(panel.target_paper_id)}</h3>${abstract}</section>`,
    `<section class="pane summary-pane"><h3>Contextualized summary ${cacheBadge}</h3>` +
      `<p class="summary-text">${escapeHtml(summaryText)}</p></section>`,
    `</div>`,
    `<h3>Retrieved passages</h3>`,
    renderHits(panel),
  );
  return pieces.join("\n");
}

export function renderPanel(state: ViewState): string {
  if (state.selectedCitance === null) {
    return `<div class="hint">Click a highlighted citance to see its summary.</div>`;
  }
  const pieces: string[] = [renderControls(state.setup)];
  if (state.loadingPanel) {
    pieces.push(`<div class="loading">Summarizing…</div>`);
  }
  if (state.error) {
    pieces.push(`<div class="error">${escapeHtml(state.error.message)}</div>`);
    if (state.error.retriable) {
      pieces.push(`<button data-action="retry">Retry</button>`);
    }
  }
  if (state.panel) {
    const cls = state.panelStale ? "panel stale" : "panel";
    const staleBadge = state.panelStale ? `<span class="badge stale">updating…</span>` : "";
    pieces.push(`<div class="${cls}">${staleBadge}${renderPanelBody(state.panel)}</div>`);
  }
  return pieces.join("\n");
}
