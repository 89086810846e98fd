/** Browser entry point: wires the store to the two page regions and
 * translates DOM events into store calls. The service mounts this app
 * under /ui, so all API paths are origin-absolute.
 */

import { ServiceClient } from "./api.js";
import { Granularity, Setup } from "./model.js";
import { renderDocument, renderPanel } from "./render.js";
import { ReaderApp } from "./state.js";

function start(): void {
  const docEl = document.getElementById("document");
  const panelEl = document.getElementById("panel");
  if (!docEl || !panelEl) throw new Error("missing #document or #panel container");

  const app = new ReaderApp(new ServiceClient(""));
  app.subscribe((state) => {
    docEl.innerHTML = renderDocument(state);
    panelEl.innerHTML = renderPanel(state);
  });

  docEl.addEventListener("click", (event) => {
    const mark = (event.target as HTMLElement).closest("mark[data-citance-id]");
    if (mark) {
      void app.onCitanceClick(mark.getAttribute("data-citance-id") ?? "");
    }
  });

  panelEl.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest("button[data-action='retry']");
    if (button) void app.retry();
  });

  panelEl.addEventListener("change", (event) => {
    const el = event.target as HTMLElement;
    const field = el.getAttribute("data-setup");
    if (!field) return;
    if (field === "useKeywords") {
      void app.setSetup({ useKeywords: (el as HTMLInputElement).checked });
    } else if (field === "granularity") {
      void app.setSetup({ granularity: (el as HTMLSelectElement).value as Granularity });
    } else if (field === "contextKind" || field === "model") {
      void app.setSetup({ [field]: (el as HTMLSelectElement).value } as Partial<Setup>);
    }
  });

  const params = new URLSearchParams(window.location.search);
  void app.loadPaperView(params.get("paper") ?? "p1-skill");
}

start();
