// Rendering helpers. Every interpolation goes through esc() so server
// data can never inject markup.

export function esc(value: unknown): string {
  return String(value ?? "")
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function table(headers: string[], rows: string[][], cls = "data"): string {
  const head = headers.map((h) => `<th>${esc(h)}</th>`).join("");
  const body = rows
    .map((row) => `<tr>${row.map((cell) => `<td>${cell}</td>`).join("")}</tr>`)
    .join("");
  return `<table class="${cls}"><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

export function errorBox(detail: string): string {
  return `<div class="error" role="alert">${esc(detail)}</div>`;
}

export function emptyNote(text: string): string {
  return `<p class="empty">${esc(text)}</p>`;
}

/** Client-side mirror of the server's 0-10 integer scale rule. */
export function scaleProblem(label: string, raw: string): string | null {
  if (!/^-?\d+$/.test(raw.trim())) return `${label} must be an integer`;
  const value = parseInt(raw, 10);
  if (value < 0 || value > 10) return `${label} must be between 0 and 10`;
  return null;
}
