import { ApiClient } from "./api";
import { Controller } from "./controller";
import { FormState } from "./state";

function mustGet(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

const controller = new Controller(
  new ApiClient(""),
  {
    form: mustGet("form"),
    gauge: mustGet("gauge"),
    whatif: mustGet("whatif"),
    importance: mustGet("importance"),
    banner: mustGet("banner"),
  },
  (query) => history.replaceState(null, "", query ? `?${query}` : location.pathname),
);

void controller.start(location.search.replace(/^\?/, "")).then(() => {
  // Build the what-if toggle list once the schema is known.
  const panel = mustGet("toggles");
  const state: FormState = controller.state;
  for (const attr of state.schema.attributes) {
    if (!state.isTogglable(attr.name)) continue;
    const label = document.createElement("label");
    label.className = "toggle";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.addEventListener("change", () => void controller.toggleWhatIf(attr.name));
    label.appendChild(box);
    label.appendChild(document.createTextNode(" " + attr.name.replace(/_/g, " ")));
    panel.appendChild(label);
  }
});
