// Wire types for the annotation service JSON API. Field names follow
// the server payloads verbatim, so responses type-check without any
// mapping layer.

export type Rating = 0 | 1 | 2 | 3 | 4;

export interface ScaleEntry {
  rating: Rating;
  label: string;
}

export interface Usage {
  identifier: string;
  lemma: string;
  context: string;
  indexes_target_token: number;
  grouping: number;
}

export interface ScheduledPair {
  lemma: string;
  usage1: Usage;
  usage2: Usage;
}

export interface Progress {
  judged: number;
  total_scheduled: number;
}

export interface NextResponse {
  pair: ScheduledPair | null;
  scale: ScaleEntry[];
  progress: Progress;
}

export interface SubmitResponse {
  accepted: boolean;
  progress: Progress;
}

export interface JudgmentDraft {
  identifier1: string;
  identifier2: string;
  annotator: string;
  judgment: Rating;
  comment: string;
}

export interface TargetStatus {
  complete: boolean;
  unconnected_multicluster_pairs: number;
  judged_pairs: number;
  total_scheduled: number;
  excluded_usages: number;
  flags: string[];
}

export interface StatusResponse {
  round: number;
  complete: boolean;
  targets: Record<string, TargetStatus>;
}

export type PeriodName = "C1" | "C2";

export interface LayoutNode {
  id: string;
  text: string;
  target_index: number;
  period: PeriodName;
  cluster: number | null;
  x: number;
  y: number;
}

export interface LayoutEdge {
  source: string;
  target: string;
  weight: number;
}

export interface WugLayout {
  lemma: string;
  nodes: LayoutNode[];
  edges: LayoutEdge[];
}

export interface ExportResponse {
  files: Record<string, string>;
  contents: Record<string, string>;
}

export interface ErrorBody {
  error: {
    code: string;
    message: string;
  };
}
