import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import { DEFAULT_SETUP, HitRow, PanelPayload } from "../src/model.js";
import { escapeHtml, renderDocument, renderPanel } from "../src/render.js";
import { ViewState } from "../src/state.js";
import { CITANCES, PAPER, makePanel } from "./stub.js";

function baseState(overrides: Partial<ViewState> = {}): ViewState {
  return {
    paperId: "pX",
    paper: PAPER,
    citances: CITANCES,
    selectedCitance: null,
    selectedTarget: null,
    setup: { ...DEFAULT_SETUP },
    panel: null,
    panelStale: false,
    loadingPaper: false,
    loadingPanel: false,
    notFound: false,
    error: null,
    ...overrides,
  };
}

function count(haystack: string, needle: string): number {
  return haystack.split(needle).length - 1;
}

function panelFor(granularity: "sentence" | "paragraph", hits: HitRow[]): PanelPayload {
  return makePanel(
    {
      citance_id: "pX:p0000:1",
      context_kind: "similar",
      model: "bm25",
      granularity,
      use_keywords: false,
    },
    { hits },
  );
}

const manyHits: HitRow[] = Array.from({ length: 7 }, (_, i) => ({
  unit_id: `pY:p${String(i).padStart(4, "0")}:0`,
  score: 3 - i * 0.25,
  text: `Passage number ${i}.`,
}));

describe("escapeHtml", () => {
  it("neutralizes markup metacharacters", () => {
    expect(escapeHtml(`<b a="1">&'`)).toBe("&lt;b a=&quot;1&quot;&gt;&amp;&#39;");
  });
});

describe("renderDocument", () => {
  it("marks every citance exactly once, in reading order", () => {
    const html = renderDocument(baseState());
    expect(count(html, "<mark")).toBe(CITANCES.length);
    for (const c of CITANCES) {
      expect(html).toContain(`data-citance-id="${c.citance_id}"`);
    }
    const first = html.indexOf("pX:p0000:1");
    const second = html.indexOf("pX:p0001:0");
    const third = html.indexOf("pX:p0001:2");
    expect(first).toBeGreaterThan(-1);
    expect(first).toBeLessThan(second);
    expect(second).toBeLessThan(third);
  });

  it("renders sections and paragraphs in order", () => {
    const html = renderDocument(baseState());
    expect(html.indexOf("<h1>")).toBeLessThan(html.indexOf("Abstract"));
    expect(html.indexOf("Abstract")).toBeLessThan(html.indexOf("Introduction"));
    expect(html.indexOf("Introduction")).toBeLessThan(html.indexOf("Method"));
    expect(count(html, "data-para-id=")).toBe(3); // one abstract + two body paragraphs
  });

  it("flags the selected citance", () => {
    const html = renderDocument(baseState({ selectedCitance: "pX:p0001:0" }));
    expect(html).toContain(`class="citance selected" data-citance-id="pX:p0001:0"`);
    expect(count(html, "citance selected")).toBe(1);
  });

  it("notes when a paper has no citances", () => {
    const html = renderDocument(baseState({ citances: [] }));
    expect(html).toContain("no detected citances");
    expect(count(html, "<mark")).toBe(0);
  });

  it("renders the not-found state", () => {
    const html = renderDocument(baseState({ paper: null, notFound: true, paperId: "nope" }));
    expect(html).toContain("Paper not found");
    expect(html).toContain("nope");
  });

  it("escapes hostile text from the corpus", () => {
    const hostile = {
      ...PAPER,
      title: `<script>alert(1)</script>`,
    };
    const html = renderDocument(baseState({ paper: hostile }));
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("renderPanel", () => {
  it("prompts for a selection when nothing is clicked", () => {
    const html = renderPanel(baseState());
    expect(html).toContain("Click a highlighted citance");
  });

  it("shows abstract and summary side by side with the citance quote", () => {
    const panel = panelFor("sentence", manyHits.slice(0, 3));
    const html = renderPanel(baseState({ selectedCitance: panel.citance.citance_id, panel }));
    expect(html).toContain("abstract-pane");
    expect(html).toContain("summary-pane");
    expect(html).toContain("Widgets built by hand are described.");
    expect(html).toContain("Hand-built widgets are catalogued and found not to scale.");
    expect(html).toContain("citance-text");
    expect(html).toContain(panel.citance.text.slice(0, 20));
  });

  it("caps sentence hits at five even when the backend overdelivers", () => {
    const panel = panelFor("sentence", manyHits); // 7 hits arrive
    const html = renderPanel(baseState({ selectedCitance: "pX:p0000:1", panel }));
    expect(count(html, "<li")).toBe(5);
  });

  it("caps paragraph hits at two", () => {
    const panel = panelFor("paragraph", manyHits.slice(0, 4));
    const html = renderPanel(baseState({ selectedCitance: "pX:p0000:1", panel }));
    expect(count(html, "<li")).toBe(2);
  });

  it("shows hit scores to three decimals", () => {
    const panel = panelFor("sentence", [{ unit_id: "pY:p0000:0", score: 1.23456, text: "t" }]);
    const html = renderPanel(baseState({ selectedCitance: "pX:p0000:1", panel }));
    expect(html).toContain("1.235");
  });

  it("marks cached responses", () => {
    const panel = { ...panelFor("sentence", manyHits.slice(0, 2)), cache_hit: true };
    const html = renderPanel(baseState({ selectedCitance: "pX:p0000:1", panel }));
    expect(html).toContain(`class="badge cached"`);
  });

  it("dims and badges a stale panel", () => {
    const panel = panelFor("sentence", manyHits.slice(0, 2));
    const html = renderPanel(
      baseState({ selectedCitance: "pX:p0000:1", panel, panelStale: true, loadingPanel: true }),
    );
    expect(html).toContain(`class="panel stale"`);
    expect(html).toContain("updating");
  });

  it("offers retry only for retriable errors", () => {
    const retriable = renderPanel(
      baseState({
        selectedCitance: "pX:p0000:1",
        error: new ApiError("ProviderTimeout", "slow model", true, 504),
      }),
    );
    expect(retriable).toContain("slow model");
    expect(retriable).toContain(`data-action="retry"`);

    const fatal = renderPanel(
      baseState({
        selectedCitance: "pX:p0000:1",
        error: new ApiError("MalformedInput", "bad setup", false, 400),
      }),
    );
    expect(fatal).toContain("bad setup");
    expect(fatal).not.toContain(`data-action="retry"`);
  });

  it("explains an unavailable cited paper instead of faking a summary", () => {
    const panel = makePanel(
      {
        citance_id: "pX:p0001:2",
        context_kind: "similar",
        model: "bm25",
        granularity: "sentence",
        use_keywords: false,
      },
      {
        target_available: false,
        target_paper_id: "ref:BIBREF2",
        abstract: [],
        hits: [],
        summary: null,
        error: { code: "TargetUnavailable", message: "no ingested full text", retriable: false },
      },
    );
    const html = renderPanel(baseState({ selectedCitance: "pX:p0001:2", panel }));
    expect(html).toContain("target-missing");
    expect(html).toContain("ref:BIBREF2");
    expect(html).not.toContain("summary-pane");
    expect(html).not.toContain("<li");
  });

  it("reflects the current setup in the controls", () => {
    const html = renderPanel(
      baseState({
        selectedCitance: "pX:p0000:1",
        setup: { contextKind: "citance", model: "dense", granularity: "paragraph", useKeywords: true },
      }),
    );
    expect(html).toContain(`<option value="citance" selected>`);
    expect(html).toContain(`<option value="dense" selected>`);
    expect(html).toContain(`<option value="paragraph" selected>`);
    expect(html).toContain("checked");
  });
});
