// Researcher workbench: ranked search, anonymised case browser, strain
// similarity explorer, subscriptions and the alerts badge. Renders only
// fields present in API responses; numbers are shown exactly as served.

import { emptyNote, esc, table } from "../render.js";
import type {
  AlertView,
  Page,
  ResearchCase,
  SearchHit,
  SimilarStrains,
  StrainProfileView,
} from "../types.js";

export function renderSearchResults(hits: SearchHit[]): string {
  if (!hits.length) return emptyNote("No matches.");
  return table(
    ["#", "Record", "Score", ""],
    hits.map((hit, i) => [
      esc(i + 1),
      `<code>${esc(hit.record_id)}</code>`,
      esc(hit.score),
      `<button data-action="open-record" data-id="${esc(hit.record_id)}">View</button>`,
    ]),
  );
}

function renderValue(value: unknown): string {
  if (value === null) return "<em>null</em>";
  if (Array.isArray(value) || (typeof value === "object" && value !== null)) {
    return `<code>${esc(JSON.stringify(value))}</code>`;
  }
  return esc(value);
}

export function renderFieldTree(fields: Record<string, unknown>): string {
  const keys = Object.keys(fields).sort();
  if (!keys.length) return emptyNote("Empty record.");
  return table(["Field", "Value"], keys.map((k) => [esc(k), renderValue(fields[k])]));
}

export function renderResearchCases(page: Page<ResearchCase>): string {
  if (!page.items.length) return emptyNote("No cases available.");
  const blocks = page.items
    .map((item) => {
      const treatments = item.treatments.length
        ? table(
            ["Formulation", "Dose", "Severity", "Effectiveness", "Noted"],
            item.treatments.map((t) => [
              renderValue(t["formulation"]),
              `${renderValue(t["dose"])} ${renderValue(t["dose_unit"])}`,
              renderValue(t["severity"]),
              renderValue(t["effectiveness"]),
              renderValue(t["noted_at"]),
            ]),
          )
        : emptyNote("No treatments on this case.");
      return `<details class="case">
  <summary>Case ${renderValue(item.case["case_id"])} — patient ${renderValue(item.case["patient_id"])}</summary>
  ${treatments}
</details>`;
    })
    .join("\n");
  return `${blocks}
<p class="hint">Showing ${esc(page.items.length)} of ${esc(page.total)} anonymised cases.</p>`;
}

export function renderStrainExplorer(
  strains: Page<StrainProfileView>,
  similar: SimilarStrains | null,
): string {
  const list = strains.items.length
    ? table(
        ["Sample", "Strain name", ""],
        strains.items.map((s) => [
          esc(s.sample_id),
          esc(s.strain_name),
          `<button data-action="similar-strains" data-id="${esc(s.sample_id)}">Similar</button>`,
        ]),
      )
    : emptyNote("No strain profiles ingested.");
  const ranked = similar
    ? `<h3>Most similar to ${esc(similar.sample_id)} (${esc(similar.strain_name)})</h3>` +
      table(
        ["Rank", "Sample", "Similarity"],
        similar.similar.map((row, i) => [
          esc(i + 1),
          esc(row.sample_id),
          esc(row.similarity.toFixed(2)),
        ]),
      )
    : "";
  return `${list}${ranked}`;
}

export function renderResearcherView(
  searchHtml: string,
  casesHtml: string,
  strainsHtml: string,
  alerts: Page<AlertView>,
): string {
  const badge = alerts.total
    ? `<span class="badge" title="alerts">${esc(alerts.total)}</span>`
    : "";
  return `
<section class="card">
  <h2>Search ${badge}</h2>
  <form id="search-form">
    <input name="q" placeholder="e.g. cbd chronic pain" required>
    <button type="submit">Search</button>
    <button type="button" data-action="subscribe-query">Watch this strain</button>
  </form>
  <div id="search-results">${searchHtml}</div>
</section>
<section class="card">
  <h2>Anonymised cases</h2>
  <div id="case-browser">${casesHtml}</div>
</section>
<section class="card">
  <h2>Strain explorer</h2>
  <div id="strain-explorer">${strainsHtml}</div>
</section>`;
}
