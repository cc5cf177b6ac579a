import { esc } from "../render.js";

export function renderLogin(message = ""): string {
  return `
<section class="card">
  <h2>Sign in</h2>
  ${message ? `<div class="error" role="alert">${esc(message)}</div>` : ""}
  <form id="login-form">
    <label>Username <input name="username" autocomplete="username" required></label>
    <label>Password <input name="password" type="password" autocomplete="current-password" required></label>
    <button type="submit">Log in</button>
  </form>
  <h3>New here?</h3>
  <form id="register-form">
    <label>Username <input name="username" required></label>
    <label>Password <input name="password" type="password" minlength="10" required></label>
    <label>Role
      <select name="role">
        <option value="patient">patient</option>
        <option value="doctor">doctor / treatment coordinator</option>
        <option value="grower">grower</option>
      </select>
    </label>
    <button type="submit">Register</button>
  </form>
  <p class="hint">Researcher access is granted on request after registration.</p>
</section>`;
}
