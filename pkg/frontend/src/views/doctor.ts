// Doctor console: manage forms (create + assign), manage users (patient
// list, join case), and per-case views with annotations and treatments.
// Every button maps 1:1 to an API endpoint.

import { emptyNote, esc, table } from "../render.js";
import type { CaseView, FormView, Page, UserView } from "../types.js";
import { renderTreatmentRows } from "./patient.js";

export function renderDoctorConsole(
  forms: Page<FormView>,
  patients: Page<UserView>,
  cases: Page<CaseView>,
  message = "",
): string {
  const caseByPatient = new Map(cases.items.map((c) => [c.patient_id, c]));

  const formRows = forms.items.length
    ? table(
        ["Title", "Questions", "Assign to", ""],
        forms.items.map((form) => [
          esc(form.title),
          esc(form.questions.length),
          `<select data-form="${esc(form.form_id)}" class="assign-target">
             ${patients.items
               .map((p) => `<option value="${esc(p.user_id)}">${esc(p.username)}</option>`)
               .join("")}
           </select>
           <select data-form="${esc(form.form_id)}" class="assign-recurrence">
             <option>once</option><option>daily</option><option>weekly</option>
           </select>`,
          `<button data-action="assign-form" data-id="${esc(form.form_id)}">Assign</button>`,
        ]),
      )
    : emptyNote("No forms yet.");

  const patientRows = patients.items.length
    ? table(
        ["Username", "Case", ""],
        patients.items.map((p) => {
          const caseView = caseByPatient.get(p.user_id);
          return [
            esc(p.username),
            caseView ? esc(caseView.case_id) : "<em>not on your list</em>",
            caseView
              ? `<button data-action="open-case" data-id="${esc(caseView.case_id)}">Open case</button>`
              : `<button data-action="join-case" data-patient="${esc(p.user_id)}">Join case</button>`,
          ];
        }),
      )
    : emptyNote("No registered patients.");

  return `
<section class="card">
  <h2>Manage forms</h2>
  ${message ? `<div class="error" role="alert">${esc(message)}</div>` : ""}
  <form id="create-form">
    <label>Title <input name="title" required></label>
    <label>Scale question <input name="prompt" required placeholder="How severe are your symptoms?"></label>
    <button type="submit">Create 0-10 check-in form</button>
  </form>
  ${formRows}
</section>
<section class="card">
  <h2>Manage users</h2>
  ${patientRows}
</section>`;
}

export function renderCaseView(caseView: CaseView, message = ""): string {
  const annotations = caseView.annotations.length
    ? `<ul class="annotations">${caseView.annotations
        .map((a) => `<li><time>${esc(a.timestamp)}</time> ${esc(a.text)}</li>`)
        .join("")}</ul>`
    : emptyNote("No annotations.");
  const entries = caseView.treatment_entries ?? [];
  const treatments = entries.length
    ? table(
        ["Noted", "Formulation", "Dose", "Severity", "Effectiveness", "Notes", ""],
        entries.map((entry, i) => [
          ...renderTreatmentRows([entry])[0],
          `<button data-action="remove-treatment" data-patient="${esc(caseView.patient_id)}" data-id="${esc(entry.entry_id)}" data-confirm="Remove this treatment from the case?">Remove</button>`,
        ]),
      )
    : emptyNote("No treatment entries.");
  return `
<section class="card">
  <h2>Case ${esc(caseView.case_id)}</h2>
  ${message ? `<div class="error" role="alert">${esc(message)}</div>` : ""}
  <h3>Treatments</h3>
  ${treatments}
  <h3>Annotations</h3>
  ${annotations}
  <form id="annotate-form" data-id="${esc(caseView.case_id)}">
    <label>New annotation <input name="text" required></label>
    <button type="submit">Annotate</button>
  </form>
  <button data-action="back">Back</button>
</section>`;
}
