// Typed client for the CDP API. Holds the token pair, refreshes the
// access token shortly before it expires, and surfaces server errors as
// ApiFailure (status + the server's {error, detail} body, verbatim).

import type {
  AlertView,
  Annotation,
  ApiError,
  AssignmentView,
  CaseView,
  FormView,
  Page,
  Question,
  ResearchCase,
  Role,
  SearchHit,
  SimilarStrains,
  StrainProfileView,
  SubscriptionView,
  TokenResponse,
  TreatmentEntry,
  UserView,
} from "./types.js";

const REFRESH_MARGIN_SECONDS = 60;

export class ApiFailure extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiError,
  ) {
    super(`${body.error}: ${body.detail}`);
  }
}

export interface TokenState {
  accessToken: string;
  refreshToken: string;
  expiresAt: number; // epoch seconds
  userId: string;
  role: Role;
}

export interface TokenStorage {
  load(): TokenState | null;
  save(state: TokenState | null): void;
}

export class MemoryStorage implements TokenStorage {
  private state: TokenState | null = null;
  load() {
    return this.state;
  }
  save(state: TokenState | null) {
    this.state = state;
  }
}

/** Browser session storage; falls back to memory outside the browser. */
export function defaultStorage(): TokenStorage {
  if (typeof sessionStorage === "undefined") return new MemoryStorage();
  return {
    load() {
      const raw = sessionStorage.getItem("cdp-session");
      return raw ? (JSON.parse(raw) as TokenState) : null;
    },
    save(state) {
      if (state === null) sessionStorage.removeItem("cdp-session");
      else sessionStorage.setItem("cdp-session", JSON.stringify(state));
    },
  };
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly storage: TokenStorage = defaultStorage(),
    private readonly now: () => number = () => Date.now() / 1000,
  ) {}

  get session(): TokenState | null {
    return this.storage.load();
  }

  private adopt(pair: TokenResponse): TokenState {
    const state: TokenState = {
      accessToken: pair.access_token,
      refreshToken: pair.refresh_token,
      expiresAt: this.now() + pair.expires_in,
      userId: pair.user_id,
      role: pair.role,
    };
    this.storage.save(state);
    return state;
  }

  logout(): void {
    this.storage.save(null);
  }

  private async request<T>(
    method: string,
    path: string,
    options: { value?: unknown; body?: BodyInit; contentType?: string; auth?: boolean } = {},
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (options.auth !== false) {
      const state = await this.freshSession();
      headers["Authorization"] = `Bearer ${state.accessToken}`;
    }
    if (options.contentType) headers["Content-Type"] = options.contentType;
    const body =
      options.value !== undefined ? JSON.stringify(options.value) : options.body;
    const response = await fetch(this.baseUrl + path, { method, headers, body });
    const text = await response.text();
    const value = text ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ApiFailure(response.status, value as ApiError);
    }
    return value as T;
  }

  /** Refresh ahead of expiry so requests never ride an expired token. */
  private async freshSession(): Promise<TokenState> {
    const state = this.storage.load();
    if (!state) throw new ApiFailure(401, { error: "unauthorized", detail: "not logged in" });
    if (this.now() < state.expiresAt - REFRESH_MARGIN_SECONDS) return state;
    const pair = await this.request<TokenResponse>("POST", "/auth/refresh", {
      value: { refresh_token: state.refreshToken },
      auth: false,
    });
    return this.adopt(pair);
  }

  // ---- auth ----------------------------------------------------------

  async register(username: string, password: string, role: Role, profile?: Record<string, unknown>): Promise<UserView> {
    return this.request("POST", "/auth/register", {
      value: { username, password, role, profile: profile ?? {} },
      auth: false,
    });
  }

  async login(username: string, password: string): Promise<TokenState> {
    const pair = await this.request<TokenResponse>("POST", "/auth/login", {
      value: { username, password },
      auth: false,
    });
    return this.adopt(pair);
  }

  async whoami(): Promise<UserView> {
    return this.request("GET", "/users/me");
  }

  async requestResearcher(userId: string): Promise<UserView> {
    return this.request("POST", `/users/${userId}/researcher-request`);
  }

  async decideResearcher(userId: string, decision: "approved" | "denied"): Promise<UserView> {
    return this.request("POST", `/users/${userId}/researcher-decision`, { value: { decision } });
  }

  // ---- patient -------------------------------------------------------

  async treatments(patientId: string): Promise<Page<TreatmentEntry>> {
    return this.request("GET", `/patients/${patientId}/treatments`);
  }

  async addTreatment(patientId: string, entry: {
    formulation: string;
    dose: number;
    dose_unit: string;
    severity: number;
    effectiveness: number;
    free_notes?: string;
  }): Promise<TreatmentEntry> {
    return this.request("POST", `/patients/${patientId}/treatments`, { value: entry });
  }

  async assignments(status?: string): Promise<Page<AssignmentView>> {
    const suffix = status ? `?status=${status}` : "";
    return this.request("GET", `/assignments${suffix}`);
  }

  async submitAssignment(assignmentId: string, answers: Record<string, unknown>): Promise<AssignmentView> {
    return this.request("POST", `/assignments/${assignmentId}/submission`, { value: { answers } });
  }

  // ---- doctor --------------------------------------------------------

  async forms(): Promise<Page<FormView>> {
    return this.request("GET", "/forms");
  }

  async getForm(formId: string): Promise<FormView> {
    return this.request("GET", `/forms/${formId}`);
  }

  async createForm(title: string, questions: Question[]): Promise<FormView> {
    return this.request("POST", "/forms", { value: { title, questions } });
  }

  async assignForm(formId: string, patientId: string, recurrence: string): Promise<AssignmentView> {
    return this.request("POST", `/forms/${formId}/assignments`, {
      value: { patient_id: patientId, recurrence },
    });
  }

  async patients(): Promise<Page<UserView>> {
    return this.request("GET", "/patients");
  }

  async cases(): Promise<Page<CaseView>> {
    return this.request("GET", "/cases");
  }

  async caseView(caseId: string): Promise<CaseView> {
    return this.request("GET", `/cases/${caseId}`);
  }

  async annotate(caseId: string, text: string): Promise<Annotation> {
    return this.request("POST", `/cases/${caseId}/annotations`, { value: { text } });
  }

  async joinCase(caseId: string, doctorId?: string): Promise<CaseView> {
    return this.request("POST", `/cases/${caseId}/doctors`, {
      value: doctorId ? { doctor_id: doctorId } : {},
    });
  }

  async removeTreatment(patientId: string, entryId: string): Promise<CaseView> {
    return this.request("DELETE", `/patients/${patientId}/treatments/${entryId}`);
  }

  // ---- researcher ----------------------------------------------------

  async researchCases(offset = 0, limit = 50): Promise<Page<ResearchCase>> {
    return this.request("GET", `/research/cases?offset=${offset}&limit=${limit}`);
  }

  async researchRecord(recordId: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/research/records/${recordId}`);
  }

  async search(query: string, limit = 20): Promise<{ results: SearchHit[] }> {
    return this.request("GET", `/search?q=${encodeURIComponent(query)}&limit=${limit}`);
  }

  async strains(): Promise<Page<StrainProfileView>> {
    return this.request("GET", "/strains");
  }

  async similarStrains(sampleId: string, k = 5): Promise<SimilarStrains> {
    return this.request("GET", `/strains/${encodeURIComponent(sampleId)}/similar?k=${k}`);
  }

  async alerts(): Promise<Page<AlertView>> {
    return this.request("GET", "/alerts");
  }

  async subscriptions(): Promise<Page<SubscriptionView>> {
    return this.request("GET", "/subscriptions");
  }

  async subscribe(kind: string, key: string): Promise<SubscriptionView> {
    return this.request("POST", "/subscriptions", { value: { kind, key } });
  }
}
