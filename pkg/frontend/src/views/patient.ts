// Patient home: treatment history (newest first, as the API orders it),
// a new-entry form with the 0-10 scales checked client-side, and pending
// form assignments with due dates.

import { emptyNote, esc, table } from "../render.js";
import type { AssignmentView, FormView, Page, TreatmentEntry } from "../types.js";

export function renderTreatmentRows(entries: TreatmentEntry[]): string[][] {
  return entries.map((entry) => [
    esc(entry.noted_at),
    esc(entry.formulation),
    `${esc(entry.dose)} ${esc(entry.dose_unit)}`,
    esc(entry.severity),
    esc(entry.effectiveness),
    esc(entry.free_notes),
  ]);
}

export function renderPatientView(
  treatments: Page<TreatmentEntry>,
  pending: Page<AssignmentView>,
  formsById: Map<string, FormView>,
  message = "",
): string {
  const history = treatments.items.length
    ? table(
        ["Noted", "Formulation", "Dose", "Severity", "Effectiveness", "Notes"],
        renderTreatmentRows(treatments.items),
      )
    : emptyNote("No treatment entries yet.");

  const assignments = pending.items.length
    ? table(
        ["Form", "Due", "Recurrence", ""],
        pending.items.map((a) => [
          esc(formsById.get(a.form_id)?.title ?? a.form_id),
          esc(a.due_at),
          esc(a.recurrence),
          `<button data-action="open-assignment" data-id="${esc(a.assignment_id)}">Fill out</button>`,
        ]),
      )
    : emptyNote("No pending forms.");

  return `
<section class="card">
  <h2>My treatment history</h2>
  ${history}
</section>
<section class="card">
  <h2>Log a treatment</h2>
  ${message ? `<div class="error" role="alert">${esc(message)}</div>` : ""}
  <form id="treatment-form">
    <label>Formulation <input name="formulation" required placeholder="e.g. OG-1"></label>
    <label>Dose <input name="dose" type="number" step="any" min="0" required></label>
    <label>Unit <input name="dose_unit" required placeholder="mg"></label>
    <label>Severity (0-10) <input name="severity" inputmode="numeric" required></label>
    <label>Effectiveness (0-10) <input name="effectiveness" inputmode="numeric" required></label>
    <label>Notes <textarea name="free_notes"></textarea></label>
    <button type="submit">Save entry</button>
  </form>
</section>
<section class="card">
  <h2>Pending forms</h2>
  ${assignments}
</section>`;
}

export function renderAssignmentForm(assignment: AssignmentView, form: FormView): string {
  const fields = form.questions
    .map((q) => {
      const kind = q.answer_kind;
      if (kind.kind === "integer_scale") {
        return `<label>${esc(q.prompt)} (${esc(kind.min)}-${esc(kind.max)})
          <input name="${esc(q.key)}" data-kind="integer_scale" data-min="${esc(kind.min)}" data-max="${esc(kind.max)}" inputmode="numeric" required></label>`;
      }
      if (kind.kind === "boolean") {
        return `<label>${esc(q.prompt)}
          <select name="${esc(q.key)}" data-kind="boolean"><option value="true">yes</option><option value="false">no</option></select></label>`;
      }
      return `<label>${esc(q.prompt)} <input name="${esc(q.key)}" data-kind="text"></label>`;
    })
    .join("\n");
  return `
<section class="card">
  <h2>${esc(form.title)}</h2>
  <p class="hint">Due ${esc(assignment.due_at)} (${esc(assignment.recurrence)})</p>
  <form id="assignment-form" data-id="${esc(assignment.assignment_id)}">
    ${fields}
    <button type="submit">Submit answers</button>
    <button type="button" data-action="back">Back</button>
  </form>
</section>`;
}
