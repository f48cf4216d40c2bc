// Shapes mirror the backend's published response schemas (docs/api/).

export interface Citation {
  marker: number;
  entry_id: number;
  url: string;
}

export interface Candidate {
  entry_id: number;
  s_sem_raw: number;
  s_ft_raw: number;
  s_sem: number;
  s_ft: number;
  field_scores: Record<string, number>;
  s_final: number;
}

export interface Turn {
  user_text: string;
  generated_query: string;
  sql_filter: number[] | null;
  candidates: Candidate[];
  answer_raw: string;
  answer_rendered: string;
  citations: Citation[];
  degraded: boolean;
  repairs: number;
}

export interface EntryView {
  id: number;
  author_id: number;
  author_name: string;
  date: string;
  text: string;
  source_url: string | null;
  url: string;
}

export interface ServerConfig {
  alpha: number;
  gamma: number;
  k: number;
  scorer: string;
  base_url: string;
}

export interface SearchParams {
  alpha: number;
  gamma: number;
  k: number;
  scorer: string;
}
