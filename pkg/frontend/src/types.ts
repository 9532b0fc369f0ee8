export type Decision = "keep" | "discard";

export interface TextView {
  id: string;
  text: string;
  lang: string;
}

export interface PairView {
  pair_id: string;
  src_text: TextView;
  tgt_text: TextView;
  llm_rating: number | null;
  cosine: number | null;
}

export interface QueueView {
  annotator: string;
  pairs: PairView[];
  decided: number;
  total: number;
}

export interface SessionInfo {
  session_id: string;
  annotators: string[];
  total: number;
}

export interface ProgressView {
  annotators: Record<string, { decided: number; total: number }>;
}

export type ExportResult =
  | { status: "complete"; body: string }
  | { status: "incomplete"; undecided: string[] };
