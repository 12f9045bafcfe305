// Pure HTML renderers. Everything user-controlled is escaped; the only
// markup injected into snippets is the <mark> around the matched span.

import { HitDetail, PaperDetail, PaperSummary, Stats } from "./types.js";

export interface QueueStateLike {
  items: PaperSummary[];
  total: number;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/**
 * Split a hit snippet at the exact matched-surface boundaries.
 *
 * Snippets carry up to 60 characters of context before the match, so the
 * match starts at min(hit.start, 60) within the snippet. The slice is
 * verified against matched_surface; if the API ever disagrees we fall
 * back to the first occurrence rather than highlight garbage.
 */
export function splitSnippet(hit: HitDetail): { before: string; match: string; after: string } {
  let offset = Math.min(hit.start, 60);
  const length = hit.matched_surface.length;
  if (hit.snippet.slice(offset, offset + length) !== hit.matched_surface) {
    const found = hit.snippet.indexOf(hit.matched_surface);
    offset = found >= 0 ? found : 0;
  }
  return {
    before: hit.snippet.slice(0, offset),
    match: hit.snippet.slice(offset, offset + length),
    after: hit.snippet.slice(offset + length),
  };
}

export function renderSnippet(hit: HitDetail): string {
  const parts = splitSnippet(hit);
  return (
    `<span class="snippet">${escapeHtml(parts.before)}` +
    `<mark>${escapeHtml(parts.match)}</mark>` +
    `${escapeHtml(parts.after)}</span>`
  );
}

export function renderHit(hit: HitDetail): string {
  const phrase =
    hit.expected_phrase === null
      ? `<code>${escapeHtml(hit.pattern)}</code>`
      : `<code>${escapeHtml(hit.pattern)}</code> <span class="arrow">→</span> ` +
        `<code class="expected">${escapeHtml(hit.expected_phrase)}</code>`;
  return (
    `<li class="hit hit-${hit.category}">` +
    `<span class="badge">${hit.category}</span> ${phrase}` +
    `<div>${renderSnippet(hit)}</div>` +
    `</li>`
  );
}

function externalLink(url: string | null, label: string): string {
  if (!url) {
    return "";
  }
  return `<a href="${escapeHtml(url)}" target="_blank" rel="noopener">${escapeHtml(label)}</a>`;
}

export function renderPaperDetail(detail: PaperDetail): string {
  const record = detail.record;
  const links = [
    record.doi
      ? externalLink(`https://doi.org/${record.doi}`, `doi:${record.doi}`)
      : "",
    externalLink(record.record_url, "index record"),
    externalLink(record.pubpeer_url, "PubPeer thread"),
  ].filter(Boolean);
  const hits = detail.hits.map(renderHit).join("");
  const assessments = detail.assessments
    .map(
      (a) =>
        `<li>${escapeHtml(a.verdict)} — ${escapeHtml(a.assessor)}` +
        `${a.note ? `: ${escapeHtml(a.note)}` : ""}</li>`,
    )
    .join("");
  const label = detail.status.label ? ` (${detail.status.label})` : "";
  return `
<article class="paper-detail" data-paper-id="${escapeHtml(record.paper_id)}">
  <h2>${escapeHtml(record.title || record.paper_id)}</h2>
  <p class="links">${links.join(" · ") || "no external links"}</p>
  <p class="status">status: ${detail.status.state}${label}</p>
  <h3>${detail.hits.length} fingerprint hit(s)</h3>
  <ul class="hits">${hits}</ul>
  <h3>assessments</h3>
  <ul class="assessments">${assessments || "<li>none yet</li>"}</ul>
</article>`;
}

export function renderQueue(state: QueueStateLike): string {
  if (state.items.length === 0) {
    return `<p class="empty">No papers match this filter — the queue is clear.</p>`;
  }
  const rows = state.items
    .map(
      (p: PaperSummary) => `
  <tr data-paper-id="${escapeHtml(p.paper_id)}">
    <td class="title">${escapeHtml(p.title || p.paper_id)}</td>
    <td>${escapeHtml(p.doi ?? "")}</td>
    <td>${p.categories.map((c) => `<span class="badge">${c}</span>`).join(" ")}</td>
    <td class="num">${p.hit_count}</td>
    <td>${p.status.state}${p.status.label ? ` (${p.status.label})` : ""}</td>
  </tr>`,
    )
    .join("");
  return `
<p class="count-badge"><strong>${state.total}</strong> paper(s) in view</p>
<table class="queue">
  <thead><tr><th>title</th><th>DOI</th><th>categories</th><th>hits</th><th>status</th></tr></thead>
  <tbody>${rows}</tbody>
</table>`;
}

export function renderStats(stats: Stats): string {
  const categories = Object.entries(stats.per_category_counts)
    .map(([category, count]) => `${category}: ${count}`)
    .join(" · ");
  return (
    `<p class="stats">suspects: ${stats.total_suspects} · ` +
    `awaiting: ${stats.awaiting} · assessed: ${stats.assessed} ` +
    `(problematic ${stats.assessed_problematic}, ` +
    `not problematic ${stats.assessed_not_problematic}, ` +
    `unsure ${stats.assessed_unsure})<br>papers by category — ${categories}</p>`
  );
}

export function renderFormErrors(problems: string[]): string {
  if (problems.length === 0) {
    return "";
  }
  return `<ul class="form-errors">${problems
    .map((p) => `<li>${escapeHtml(p)}</li>`)
    .join("")}</ul>`;
}
