// Single-page app shell: hash routing with role gates, event delegation
// for data-action buttons, re-fetch after every mutation (no optimistic
// state except the annotation append).

import { ApiClient, ApiFailure } from "./api.js";
import { esc, scaleProblem } from "./render.js";
import { homeRoute, resolveRoute } from "./session.js";
import type { AssignmentView, FormView, Question } from "./types.js";
import { renderCaseView, renderDoctorConsole } from "./views/doctor.js";
import { renderLogin } from "./views/login.js";
import { renderAssignmentForm, renderPatientView } from "./views/patient.js";
import {
  renderResearchCases,
  renderResearcherView,
  renderSearchResults,
  renderStrainExplorer,
} from "./views/researcher.js";

const api = new ApiClient((window as { CDP_API_BASE?: string }).CDP_API_BASE ?? "http://127.0.0.1:8080");
const root = document.getElementById("app")!;
const nav = document.getElementById("nav")!;

function detail(err: unknown): string {
  if (err instanceof ApiFailure) return err.body.detail;
  return String(err);
}

function renderNav(): void {
  const session = api.session;
  nav.innerHTML = session
    ? `<span>${esc(session.userId)} (${esc(session.role)})</span>
       <button data-action="logout">Log out</button>`
    : "";
}

async function showLogin(message = ""): Promise<void> {
  root.innerHTML = renderLogin(message);
}

async function showPatient(message = ""): Promise<void> {
  const session = api.session!;
  const [treatments, pending] = await Promise.all([
    api.treatments(session.userId),
    api.assignments("pending"),
  ]);
  const formsById = new Map<string, FormView>();
  for (const formId of new Set(pending.items.map((a) => a.form_id))) {
    formsById.set(formId, await api.getForm(formId));
  }
  root.innerHTML = renderPatientView(treatments, pending, formsById, message);
}

async function showAssignment(assignment: AssignmentView, form: FormView): Promise<void> {
  root.innerHTML = renderAssignmentForm(assignment, form);
}

async function showDoctor(message = ""): Promise<void> {
  const [forms, patients, cases] = await Promise.all([
    api.forms(),
    api.patients(),
    api.cases(),
  ]);
  root.innerHTML = renderDoctorConsole(forms, patients, cases, message);
}

async function showCase(caseId: string, message = ""): Promise<void> {
  root.innerHTML = renderCaseView(await api.caseView(caseId), message);
}

async function showResearcher(): Promise<void> {
  const [cases, strains, alerts] = await Promise.all([
    api.researchCases(),
    api.strains().catch(() => ({ items: [], offset: 0, limit: 50, total: 0 })),
    api.alerts(),
  ]);
  root.innerHTML = renderResearcherView(
    renderSearchResults([]),
    renderResearchCases(cases),
    renderStrainExplorer(strains, null),
    alerts,
  );
}

async function route(): Promise<void> {
  renderNav();
  const session = api.session;
  const target = resolveRoute(location.hash || "#/login", session?.role ?? null);
  if (target !== location.hash) {
    location.hash = target;
    return;
  }
  try {
    if (target === "#/login") await showLogin();
    else if (target === "#/patient") await showPatient();
    else if (target === "#/doctor") await showDoctor();
    else if (target === "#/researcher") await showResearcher();
    else root.innerHTML = `<section class="card"><h2>Not available</h2>
      <p>This account's role has no browser workspace.</p></section>`;
  } catch (err) {
    if (err instanceof ApiFailure && err.status === 401) {
      api.logout();
      location.hash = "#/login";
      return;
    }
    if (err instanceof ApiFailure && err.status === 403) {
      root.innerHTML = `<section class="card"><h2>Forbidden</h2><p>${esc(detail(err))}</p></section>`;
      return;
    }
    root.innerHTML = `<section class="card"><h2>Error</h2><p>${esc(detail(err))}</p></section>`;
  }
}

// ---- form submissions -------------------------------------------------

async function onSubmit(event: SubmitEvent): Promise<void> {
  const form = event.target as HTMLFormElement;
  event.preventDefault();
  const data = new FormData(form);
  const get = (name: string) => String(data.get(name) ?? "");

  try {
    if (form.id === "login-form") {
      const state = await api.login(get("username"), get("password"));
      location.hash = homeRoute(state.role);
      await route();
    } else if (form.id === "register-form") {
      await api.register(get("username"), get("password"), get("role") as never);
      await showLogin("Registered. You can sign in now.");
    } else if (form.id === "treatment-form") {
      // client-side mirror of the server's 0-10 rule: invalid input never
      // leaves the browser
      const problem =
        scaleProblem("Severity", get("severity")) ??
        scaleProblem("Effectiveness", get("effectiveness"));
      if (problem) {
        await showPatient(problem);
        return;
      }
      await api.addTreatment(api.session!.userId, {
        formulation: get("formulation"),
        dose: parseFloat(get("dose")),
        dose_unit: get("dose_unit"),
        severity: parseInt(get("severity"), 10),
        effectiveness: parseInt(get("effectiveness"), 10),
        free_notes: get("free_notes"),
      });
      await showPatient();
    } else if (form.id === "assignment-form") {
      const answers: Record<string, unknown> = {};
      for (const input of Array.from(form.querySelectorAll<HTMLElement>("[name]"))) {
        const element = input as HTMLInputElement;
        const kind = element.dataset.kind;
        if (kind === "integer_scale") answers[element.name] = parseInt(element.value, 10);
        else if (kind === "boolean") answers[element.name] = element.value === "true";
        else answers[element.name] = element.value;
      }
      await api.submitAssignment(form.dataset.id!, answers);
      await showPatient();
    } else if (form.id === "create-form") {
      const questions: Question[] = [
        {
          key: "severity",
          prompt: get("prompt"),
          answer_kind: { kind: "integer_scale", min: 0, max: 10 },
        },
      ];
      await api.createForm(get("title"), questions);
      await showDoctor();
    } else if (form.id === "annotate-form") {
      await api.annotate(form.dataset.id!, get("text"));
      await showCase(form.dataset.id!);
    } else if (form.id === "search-form") {
      const { results } = await api.search(get("q"));
      document.getElementById("search-results")!.innerHTML = renderSearchResults(results);
    }
  } catch (err) {
    const message = detail(err);
    if (form.id === "login-form" || form.id === "register-form") await showLogin(message);
    else if (form.id === "treatment-form" || form.id === "assignment-form") await showPatient(message);
    else if (form.id === "create-form") await showDoctor(message);
    else root.innerHTML = `<section class="card"><h2>Error</h2><p>${esc(message)}</p></section>`;
  }
}

// ---- button actions ----------------------------------------------------

async function onClick(event: MouseEvent): Promise<void> {
  const button = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (!button) return;
  const action = button.dataset.action!;
  if (button.dataset.confirm && !window.confirm(button.dataset.confirm)) return;

  try {
    if (action === "logout") {
      api.logout();
      location.hash = "#/login";
      await route();
    } else if (action === "back") {
      await route();
    } else if (action === "open-case") {
      await showCase(button.dataset.id!);
    } else if (action === "join-case") {
      // coordinators see every case and can add themselves; a plain
      // doctor's case list won't contain it, so ask the coordinator
      const cases = await api.cases();
      const target = cases.items.find((c) => c.patient_id === button.dataset.patient);
      if (target) {
        await api.joinCase(target.case_id);
        await showDoctor("Joined the patient's case.");
      } else {
        await showDoctor("Ask the coordinator to add you to this case.");
      }
    } else if (action === "assign-form") {
      const formId = button.dataset.id!;
      const target = document.querySelector<HTMLSelectElement>(
        `select.assign-target[data-form="${formId}"]`,
      )!;
      const recurrence = document.querySelector<HTMLSelectElement>(
        `select.assign-recurrence[data-form="${formId}"]`,
      )!;
      await api.assignForm(formId, target.value, recurrence.value);
      await showDoctor("Form assigned.");
    } else if (action === "open-assignment") {
      const pending = await api.assignments("pending");
      const assignment = pending.items.find((a) => a.assignment_id === button.dataset.id);
      if (assignment) {
        await showAssignment(assignment, await api.getForm(assignment.form_id));
      }
    } else if (action === "remove-treatment") {
      await api.removeTreatment(button.dataset.patient!, button.dataset.id!);
      await showCase((await api.cases()).items[0]?.case_id ?? "");
    } else if (action === "open-record") {
      const fields = await api.researchRecord(button.dataset.id!);
      const { renderFieldTree } = await import("./views/researcher.js");
      document.getElementById("search-results")!.innerHTML = renderFieldTree(fields);
    } else if (action === "similar-strains") {
      const similar = await api.similarStrains(button.dataset.id!, 5);
      const strains = await api.strains();
      document.getElementById("strain-explorer")!.innerHTML = renderStrainExplorer(strains, similar);
    } else if (action === "subscribe-query") {
      const input = document.querySelector<HTMLInputElement>('#search-form input[name="q"]')!;
      if (input.value) await api.subscribe("strain", input.value);
    }
  } catch (err) {
    root.innerHTML = `<section class="card"><h2>Error</h2><p>${esc(detail(err))}</p></section>`;
  }
}

window.addEventListener("hashchange", () => void route());
document.addEventListener("submit", (e) => void onSubmit(e as SubmitEvent));
document.addEventListener("click", (e) => void onClick(e));
void route();
