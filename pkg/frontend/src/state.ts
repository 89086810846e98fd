/** View state and the transitions behind the reader's three interactions:
 * loading a paper, clicking a citance, and changing the retrieval setup.
 *
 * Panel requests carry a sequence number. Only the newest request may
 * write its response into the state; anything slower is dropped, so the
 * panel always matches the current (citance, setup) selection or is
 * flagged stale while a replacement is on its way. Identical requests
 * are never issued twice concurrently: the second caller just waits.
 */

import { ApiError, ServiceClient, toApiError } from "./api.js";
import {
  CitanceRow,
  DEFAULT_SETUP,
  PanelPayload,
  PaperDoc,
  Setup,
  setupKey,
} from "./model.js";

export interface ViewState {
  paperId: string | null;
  paper: PaperDoc | null;
  citances: CitanceRow[];
  selectedCitance: string | null;
  selectedTarget: string | null;
  setup: Setup;
  panel: PanelPayload | null;
  panelStale: boolean;
  loadingPaper: boolean;
  loadingPanel: boolean;
  notFound: boolean;
  error: ApiError | null;
}

function initialState(): ViewState {
  return {
    paperId: null,
    paper: null,
    citances: [],
    selectedCitance: null,
    selectedTarget: null,
    setup: { ...DEFAULT_SETUP },
    panel: null,
    panelStale: false,
    loadingPaper: false,
    loadingPanel: false,
    notFound: false,
    error: null,
  };
}

export type Listener = (state: ViewState) => void;

export class ReaderApp {
  private readonly client: ServiceClient;
  private readonly listeners: Listener[] = [];
  private _state: ViewState = initialState();
  private panelSeq = 0;
  private inflightKey: string | null = null;
  private inflightDone: Promise<void> = Promise.resolve();

  constructor(client: ServiceClient) {
    this.client = client;
  }

  get state(): ViewState {
    return this._state;
  }

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  private patch(changes: Partial<ViewState>): void {
    this._state = { ...this._state, ...changes };
    for (const fn of this.listeners) fn(this._state);
  }

  /** Fetch a paper and its citance list; resets any previous selection. */
  async loadPaperView(paperId: string): Promise<void> {
    this.panelSeq += 1; // orphan any in-flight panel request
    this.inflightKey = null;
    this.patch({
      ...initialState(),
      paperId,
      setup: this._state.setup, // setup choice survives paper switches
      loadingPaper: true,
    });
    try {
      const [paper, listing] = await Promise.all([
        this.client.getPaper(paperId),
        this.client.getCitances(paperId),
      ]);
      if (this._state.paperId !== paperId) return; // user moved on
      this.patch({ paper, citances: listing.citances, loadingPaper: false });
    } catch (err) {
      if (this._state.paperId !== paperId) return;
      const apiErr = toApiError(err);
      this.patch({
        loadingPaper: false,
        notFound: apiErr.code === "NotFound",
        error: apiErr.code === "NotFound" ? null : apiErr,
      });
    }
  }

  /** Select a citance and request its panel under the current setup. */
  async onCitanceClick(citanceId: string, targetPaperId: string | null = null): Promise<void> {
    this.patch({ selectedCitance: citanceId, selectedTarget: targetPaperId });
    await this.requestPanel();
  }

  /** Change part of the setup; re-requests the open panel if there is one. */
  async setSetup(changes: Partial<Setup>): Promise<void> {
    this.patch({ setup: { ...this._state.setup, ...changes } });
    if (this._state.selectedCitance !== null) {
      await this.requestPanel();
    }
  }

  /** Re-issue the last panel request after a retriable failure. */
  async retry(): Promise<void> {
    if (this._state.selectedCitance !== null) {
      await this.requestPanel();
    }
  }

  private requestKey(): string {
    return [
      this._state.selectedCitance,
      this._state.selectedTarget ?? "",
      setupKey(this._state.setup),
    ].join("|");
  }

  private async requestPanel(): Promise<void> {
    const citanceId = this._state.selectedCitance;
    if (citanceId === null) return;
    const key = this.requestKey();
    if (this.inflightKey === key) {
      // same citance and setup already on the wire; don't double-request
      await this.inflightDone;
      return;
    }
    const seq = ++this.panelSeq;
    this.inflightKey = key;
    this.patch({
      loadingPanel: true,
      error: null,
      // an on-screen panel for some other selection is stale, not wrong
      panelStale: this._state.panel !== null,
    });
    const work = (async () => {
      const { setup, selectedTarget } = this._state;
      try {
        const panel = await this.client.summarize({
          citance_id: citanceId,
          context_kind: setup.contextKind,
          model: setup.model,
          granularity: setup.granularity,
          use_keywords: setup.useKeywords,
          ...(selectedTarget !== null ? { target_paper_id: selectedTarget } : {}),
        });
        if (seq !== this.panelSeq) return; // superseded; ignore this response
        this.patch({ panel, panelStale: false, loadingPanel: false });
      } catch (err) {
        if (seq !== this.panelSeq) return;
        this.patch({ loadingPanel: false, error: toApiError(err) });
      } finally {
        if (seq === this.panelSeq) this.inflightKey = null;
      }
    })();
    this.inflightDone = work;
    await work;
  }
}
