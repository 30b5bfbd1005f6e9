/** Form state: attribute values, pending what-if toggles, and the exact
 * request object sent to the API.
 *
 * Everything the form can construct must be accepted by the server, so
 * building the request is where free-text numeric fields get sanitized:
 * a value that would be rejected is simply not sent.
 */

import type { ApiSchema, FormValues, Mutation, SchemaAttribute } from "./types";

/** Optional text attributes whose what-if toggle means present vs absent. */
const PRESENCE_PLACEHOLDERS: Record<string, string> = {
  privacy_policy_link: "https://example.com/privacy",
  developer_website: "https://example.com",
  developer_email: "support@example.com",
  developer_address: "1 Example Street",
  whats_new: "Bug fixes and improvements.",
};

const DOWNLOADS_RE = /^\d[\d,]*\s*(-\s*\d[\d,]*)?\+?$/;

export class FormState {
  readonly values: FormValues = {};
  readonly pendingToggles = new Set<string>();

  constructor(readonly schema: ApiSchema) {}

  attribute(name: string): SchemaAttribute | undefined {
    return this.schema.attributes.find((a) => a.name === name);
  }

  set(name: string, raw: string): void {
    const attr = this.attribute(name);
    if (!attr) throw new Error(`unknown attribute ${name}`);
    if (raw === "") {
      delete this.values[name];
      return;
    }
    if (attr.kind === "binary") {
      this.values[name] = raw === "1" || raw === "true" ? 1 : 0;
      if (this.values[name] === 0) delete this.values[name];
    } else if (attr.kind === "number") {
      const parsed = Number(raw);
      if (Number.isFinite(parsed)) this.values[name] = parsed;
      else delete this.values[name];
    } else {
      this.values[name] = raw;
    }
  }

  /** The attribute object for /v1/predict; only set, sendable values. */
  buildRequest(): FormValues {
    const out: FormValues = {};
    for (const attr of this.schema.attributes) {
      const value = this.values[attr.name];
      if (value === undefined || value === "") continue;
      if (attr.kind === "downloads" && !DOWNLOADS_RE.test(String(value).trim())) continue;
      if (attr.kind === "category" && attr.values && !attr.values.includes(String(value))) continue;
      out[attr.name] = value;
    }
    return out;
  }

  /** Attributes offering a one-click what-if toggle. */
  isTogglable(name: string): boolean {
    const attr = this.attribute(name);
    if (!attr) return false;
    return attr.kind === "binary" || name in PRESENCE_PLACEHOLDERS;
  }

  /** The mutated value a toggle would send for this attribute. */
  toggleValue(name: string): unknown {
    const attr = this.attribute(name);
    if (!attr) throw new Error(`unknown attribute ${name}`);
    const current = this.values[name];
    if (attr.kind === "binary") {
      return current === 1 ? 0 : 1;
    }
    const placeholder = PRESENCE_PLACEHOLDERS[name];
    if (placeholder === undefined) throw new Error(`${name} is not togglable`);
    return current === undefined || current === "" ? placeholder : null;
  }

  toggle(name: string): void {
    if (!this.isTogglable(name)) throw new Error(`${name} is not togglable`);
    if (this.pendingToggles.has(name)) this.pendingToggles.delete(name);
    else this.pendingToggles.add(name);
  }

  mutations(): Mutation[] {
    return [...this.pendingToggles].map((name) => ({
      attribute: name,
      value: this.toggleValue(name),
    }));
  }

  /** Shareable URL query string of the current form values. */
  toQuery(): string {
    const params = new URLSearchParams();
    for (const [name, value] of Object.entries(this.values)) {
      params.set(name, String(value));
    }
    return params.toString();
  }

  loadQuery(query: string): void {
    const params = new URLSearchParams(query);
    for (const [name, raw] of params.entries()) {
      if (this.attribute(name)) this.set(name, raw);
    }
  }
}
