/** Wires the form to the API.  Each user action issues requests tagged with
 * a monotonically increasing sequence number; a response older than the
 * latest issued tag of its kind is discarded, so a slow reply can never
 * overwrite a newer form state's numbers.
 */

import { ApiClient, ApiRequestError } from "./api";
import { FormState } from "./state";
import {
  clearBanner,
  clearFieldErrors,
  renderBanner,
  renderForm,
  renderGauge,
  renderImportance,
  renderWhatIf,
  showFieldError,
} from "./render";

export interface Elements {
  form: HTMLElement;
  gauge: HTMLElement;
  whatif: HTMLElement;
  importance: HTMLElement;
  banner: HTMLElement;
}

export class Controller {
  state!: FormState;
  private predictTag = 0;
  private whatifTag = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly els: Elements,
    private readonly onQueryChange: (query: string) => void = () => {},
  ) {}

  /** Fetch the schema and build the form; on failure show a retry banner. */
  async start(initialQuery = ""): Promise<void> {
    let schema;
    try {
      schema = await this.api.schema();
    } catch (err) {
      renderBanner(this.els.banner, `Cannot reach the prediction service (${String(err)}).`, () => {
        void this.start(initialQuery);
      });
      return;
    }
    clearBanner(this.els.banner);
    this.state = new FormState(schema);
    this.state.loadQuery(initialQuery);
    renderForm(this.state, this.els.form, (name, value) => {
      this.state.set(name, value);
      this.onQueryChange(this.state.toQuery());
      void this.refreshPrediction();
      void this.refreshWhatIf();
    });
    await this.refreshImportance();
    await this.refreshPrediction();
  }

  async refreshPrediction(): Promise<void> {
    const tag = ++this.predictTag;
    clearFieldErrors(this.els.form);
    try {
      const response = await this.api.predict(this.state.buildRequest());
      if (tag !== this.predictTag) return; // stale
      renderGauge(this.els.gauge, response);
    } catch (err) {
      if (tag !== this.predictTag) return;
      this.surfaceError(err);
    }
  }

  /** Add or remove a what-if toggle; issues exactly one /v1/whatif call. */
  async toggleWhatIf(attribute: string): Promise<void> {
    this.state.toggle(attribute);
    await this.refreshWhatIf();
  }

  async refreshWhatIf(): Promise<void> {
    const tag = ++this.whatifTag;
    const mutations = this.state.mutations();
    if (mutations.length === 0) {
      renderWhatIf(this.els.whatif, []);
      return;
    }
    try {
      const response = await this.api.whatif(this.state.buildRequest(), mutations);
      if (tag !== this.whatifTag) return; // stale
      renderWhatIf(this.els.whatif, response.results);
    } catch (err) {
      if (tag !== this.whatifTag) return;
      this.surfaceError(err);
    }
  }

  async refreshImportance(): Promise<void> {
    try {
      const { importance } = await this.api.importance();
      renderImportance(this.els.importance, importance);
    } catch (err) {
      this.surfaceError(err);
    }
  }

  private surfaceError(err: unknown): void {
    if (err instanceof ApiRequestError) {
      // 4xx name their offending attribute in the message; surface inline
      // when possible, otherwise in the banner.
      const match = /^([a-z_]+):/.exec(err.message) ?? /'([a-z_]+)'/.exec(err.message);
      const attribute = match?.[1];
      if (attribute && this.state.attribute(attribute)) {
        showFieldError(this.els.form, attribute, err.message);
        return;
      }
    }
    renderBanner(this.els.banner, String(err), () => {
      clearBanner(this.els.banner);
      void this.refreshPrediction();
    });
  }
}
