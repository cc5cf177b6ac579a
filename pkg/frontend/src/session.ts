// Role-gated routing: the client-side mirror of the server's access
// policy. Unauthorized routes redirect rather than render; the server
// would 403 anyway, this just keeps the UI honest.

import type { Role } from "./types.js";

export type Route = "#/login" | "#/patient" | "#/doctor" | "#/researcher" | "#/forbidden";

const ROUTE_ROLES: Record<Route, Role[] | "open"> = {
  "#/login": "open",
  "#/patient": ["patient"],
  "#/doctor": ["doctor"],
  "#/researcher": ["researcher"],
  "#/forbidden": "open",
};

export function homeRoute(role: Role): Route {
  switch (role) {
    case "patient":
      return "#/patient";
    case "doctor":
      return "#/doctor";
    case "researcher":
      return "#/researcher";
    default:
      return "#/forbidden"; // growers use the CLI/API surface in this release
  }
}

/** Where navigation to `target` actually lands for this session. */
export function resolveRoute(target: string, role: Role | null): Route {
  const route = (Object.keys(ROUTE_ROLES) as Route[]).find((r) => r === target);
  if (!route) return role ? homeRoute(role) : "#/login";
  const allowed = ROUTE_ROLES[route];
  if (allowed === "open") return route;
  if (role === null) return "#/login";
  return allowed.includes(role) ? route : "#/forbidden";
}
