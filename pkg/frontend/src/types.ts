// Wire types for the CDP HTTP API. Field names mirror the canonical JSON
// payloads exactly; the UI never invents or recomputes server values.

export type Role = "patient" | "doctor" | "grower" | "researcher";

export interface TokenResponse {
  access_token: string;
  refresh_token: string;
  expires_in: number;
  token_type: string;
  user_id: string;
  role: Role;
}

export interface UserView {
  user_id: string;
  username: string;
  role: Role;
  researcher_request: string;
  profile: Record<string, unknown>;
  coordinator?: boolean;
}

export interface Page<T> {
  items: T[];
  offset: number;
  limit: number;
  total: number;
}

export interface TreatmentEntry {
  entry_id: string;
  patient_id: string;
  formulation: string;
  dose: number;
  dose_unit: string;
  severity: number;
  effectiveness: number;
  noted_at: string;
  free_notes: string;
}

export interface Question {
  key: string;
  prompt: string;
  answer_kind: { kind: "integer_scale"; min: number; max: number } | { kind: "text" } | { kind: "boolean" };
}

export interface FormView {
  form_id: string;
  title: string;
  questions: Question[];
  created_by: string;
}

export interface AssignmentView {
  assignment_id: string;
  form_id: string;
  patient_id: string;
  recurrence: "once" | "daily" | "weekly";
  assigned_by: string;
  status: "pending" | "submitted" | "withdrawn";
  due_at: string;
  answers: Record<string, unknown> | null;
  follow_up?: AssignmentView | null;
}

export interface Annotation {
  author_id: string;
  timestamp: string;
  text: string;
}

export interface CaseView {
  case_id: string;
  patient_id: string;
  assigned_doctors: string[];
  annotations: Annotation[];
  treatments: string[];
  treatment_entries?: TreatmentEntry[];
}

export interface ResearchCase {
  case: Record<string, unknown>;
  treatments: Record<string, unknown>[];
}

export interface SearchHit {
  record_id: string;
  score: number;
}

export interface StrainProfileView {
  sample_id: string;
  strain_name: string;
  features: number[];
  feature_names: string[];
}

export interface SimilarStrains {
  sample_id: string;
  strain_name: string;
  similar: { sample_id: string; similarity: number }[];
}

export interface AlertView {
  alert_id: string;
  sub_id: string;
  event_ref: string;
  created_at: string;
  delivered: boolean;
}

export interface SubscriptionView {
  sub_id: string;
  user_id: string;
  topic_kind: "strain" | "treatment" | "experiment";
  topic_key: string;
}

export interface ApiError {
  error: string;
  detail: string;
}
