/** Full reading flow against a stubbed service: highlight counts, the
 * click-to-panel path with its hit limits, and request accounting for
 * setup toggles.
 */

import { describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { SummarizeRequest } from "../src/model.js";
import { renderDocument, renderPanel } from "../src/render.js";
import { ReaderApp } from "../src/state.js";
import { CITANCES, makePanel, serviceStub } from "./stub.js";

function count(haystack: string, needle: string): number {
  return haystack.split(needle).length - 1;
}

describe("reading flow", () => {
  it("highlights every citance the service lists for the paper", async () => {
    const stub = serviceStub();
    const app = new ReaderApp(new ServiceClient("", stub.fetchFn));
    await app.loadPaperView("pX");

    const html = renderDocument(app.state);
    expect(count(html, "<mark")).toBe(CITANCES.length);
    for (const c of app.state.citances) {
      expect(html).toContain(`data-citance-id="${c.citance_id}"`);
    }
  });

  it("click renders abstract plus summary within the sentence limit", async () => {
    // overdeliver on purpose: the reader must still show at most 5
    const stub = serviceStub((req) =>
      makePanel(req, {
        hits: Array.from({ length: 9 }, (_, i) => ({
          unit_id: `pY:p${String(i).padStart(4, "0")}:0`,
          score: 9 - i,
          text: `Sentence ${i} from the cited paper.`,
        })),
      }),
    );
    const app = new ReaderApp(new ServiceClient("", stub.fetchFn));
    await app.loadPaperView("pX");
    await app.onCitanceClick("pX:p0000:1");

    const html = renderPanel(app.state);
    expect(html).toContain("abstract-pane");
    expect(html).toContain("Widgets built by hand are described.");
    expect(html).toContain("summary-pane");
    expect(html).toContain("Hand-built widgets are catalogued and found not to scale.");
    expect(count(html, "<li")).toBe(5);
  });

  it("the paragraph granularity shows at most two passages", async () => {
    const stub = serviceStub((req) =>
      makePanel(req, {
        hits: Array.from({ length: 4 }, (_, i) => ({
          unit_id: `pY:p${String(i).padStart(4, "0")}`,
          score: 4 - i,
          text: `Paragraph ${i}.`,
        })),
      }),
    );
    const app = new ReaderApp(new ServiceClient("", stub.fetchFn));
    await app.loadPaperView("pX");
    await app.setSetup({ granularity: "paragraph" });
    await app.onCitanceClick("pX:p0000:1");

    expect(count(renderPanel(app.state), "<li")).toBe(2);
  });

  it("a setup toggle issues exactly one new request", async () => {
    const stub = serviceStub();
    const app = new ReaderApp(new ServiceClient("", stub.fetchFn));
    await app.loadPaperView("pX");
    await app.onCitanceClick("pX:p0000:1");

    const before = stub.calls.filter((c) => c.url === "/summarize").length;
    await app.setSetup({ contextKind: "citance" });
    const after = stub.calls.filter((c) => c.url === "/summarize");
    expect(after.length - before).toBe(1);
    expect((after[after.length - 1]!.body as SummarizeRequest).context_kind).toBe("citance");
    // the new panel is on screen and no longer stale
    expect(app.state.panel?.setup.context_kind).toBe("citance");
    expect(app.state.panelStale).toBe(false);
  });

  it("a repeat click reveals the service cache, not a regeneration", async () => {
    const stub = serviceStub((req, i) => makePanel(req, { cache_hit: i > 0 }));
    const app = new ReaderApp(new ServiceClient("", stub.fetchFn));
    await app.loadPaperView("pX");
    await app.onCitanceClick("pX:p0000:1");
    await app.onCitanceClick("pX:p0000:1");

    expect(app.state.panel?.cache_hit).toBe(true);
    expect(renderPanel(app.state)).toContain(`class="badge cached"`);
  });

  it("never mutates corpus data: only GETs and the summarize POST", async () => {
    const stub = serviceStub();
    const app = new ReaderApp(new ServiceClient("", stub.fetchFn));
    await app.loadPaperView("pX");
    await app.onCitanceClick("pX:p0001:0");
    await app.setSetup({ useKeywords: true });

    for (const call of stub.calls) {
      expect(call.method === "GET" || call.url === "/summarize").toBe(true);
    }
  });

  it("every displayed summary is traceable to its source passages", async () => {
    const stub = serviceStub();
    const app = new ReaderApp(new ServiceClient("", stub.fetchFn));
    await app.loadPaperView("pX");
    await app.onCitanceClick("pX:p0000:1");

    const panel = app.state.panel!;
    expect(panel.summary!.source_texts).toEqual(panel.hits.map((h) => h.text));
  });
});
