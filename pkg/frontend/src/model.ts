/** Wire types for the service JSON API, plus the client-side setup model. */

export type ContextKind = "citance" | "neighbors" | "similar";
export type RetrievalModel = "bm25" | "dense";
export type Granularity = "sentence" | "paragraph";

export interface Setup {
  contextKind: ContextKind;
  model: RetrievalModel;
  granularity: Granularity;
  useKeywords: boolean;
}

// Matches the service's default summarize request.
export const DEFAULT_SETUP: Setup = {
  contextKind: "similar",
  model: "bm25",
  granularity: "sentence",
  useKeywords: false,
};

// The reader never shows more hits than these, whatever the backend sends.
export const HIT_LIMIT: Record<Granularity, number> = { sentence: 5, paragraph: 2 };

export function setupKey(s: Setup): string {
  return [s.contextKind, s.model, s.granularity, s.useKeywords ? "kw" : "plain"].join("|");
}

export interface SentenceRow {
  sent_index: number;
  char_start: number;
  char_end: number;
  text: string;
}

export interface CiteSpanRow {
  start: number;
  end: number;
  ref_id: string;
}

export interface ParagraphRow {
  para_id: string;
  text: string;
  sentences: SentenceRow[];
  cite_spans: CiteSpanRow[];
}

export interface SectionRow {
  section: string;
  paragraphs: ParagraphRow[];
}

export interface PaperDoc {
  paper_id: string;
  title: string;
  abstract_paragraphs: ParagraphRow[];
  body_sections: SectionRow[];
  bib_entries: Record<string, { title: string; linked_paper_id: string | null }>;
}

export interface CitanceRow {
  citance_id: string;
  paper_id: string;
  para_id: string;
  sent_index: number;
  text: string;
  targets: string[];
  target_paper_ids: (string | null)[];
}

export interface CitanceListing {
  paper_id: string;
  citances: CitanceRow[];
}

export interface ContextMember {
  para_id: string;
  sent_index: number;
  text: string;
}

export interface ContextRow {
  citance_id: string;
  kind: ContextKind;
  members: ContextMember[];
  citance_index: number;
  degenerate: boolean;
}

export interface HitRow {
  unit_id: string;
  score: number;
  text: string;
}

export interface SummaryRow {
  citance_id: string;
  target_paper_id: string;
  context_kind: ContextKind;
  model: RetrievalModel;
  granularity: Granularity;
  use_keywords: boolean;
  template: string;
  text: string;
  source_texts: string[];
  generator: string;
  created_at: string;
}

export interface PanelError {
  code: string;
  message: string;
  retriable: boolean;
}

export interface PanelPayload {
  citance: Omit<CitanceRow, "target_paper_ids">;
  contexts: Record<ContextKind, ContextRow>;
  target_paper_id: string;
  abstract: string[];
  setup: {
    context_kind: ContextKind;
    model: RetrievalModel;
    granularity: Granularity;
    use_keywords: boolean;
    template: string;
  };
  target_available: boolean;
  hits: HitRow[];
  summary: SummaryRow | null;
  cache_hit: boolean;
  error?: PanelError;
}

export interface SummarizeRequest {
  citance_id: string;
  context_kind: ContextKind;
  model: RetrievalModel;
  granularity: Granularity;
  use_keywords: boolean;
  target_paper_id?: string;
  template?: string;
}
