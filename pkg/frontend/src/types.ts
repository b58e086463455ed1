// JSON payload shapes of the backend service, mirrored verbatim.

export type FlagValue = "suspicious" | "benign" | "unknown";

export interface Hit {
  id: string;
  score: number;
  rank: number;
}

export interface QueryResult {
  seeds: string[];
  space: string;
  k: number;
  score_kind: "distance" | "similarity" | "trust";
  hits: Hit[];
}

export interface AccountCard {
  account_id: string;
  screen_name: string;
  n_posts: number;
  retweet_fraction: number;
  top_hashtags: string[];
  randstring_probability: number | null;
}

export interface QueryResponse {
  query_id: string;
  parent_id: string | null;
  result: QueryResult;
  cards: AccountCard[];
}

export interface SessionQueryEntry {
  query_id: string;
  parent_id: string | null;
  seeds: string[];
  k: number;
  space: string;
  aggregation: string;
  hit_ids: string[];
  at: string;
}

export interface FlagEntry {
  flag: FlagValue;
  at: string;
}

export interface Session {
  session_id: string;
  dataset: string;
  space: string | null;
  created_at: string;
  queries: SessionQueryEntry[];
  flags: Record<string, FlagEntry>;
  notes: string;
}

export interface SpaceInfo {
  name: string;
  dim: number | null;
  metric: string;
  kind: string;
}

export interface ProjectionPoint {
  id: string;
  x: number;
  y: number;
  label: number | null;
}

export interface Projection {
  space: string;
  method: string;
  points: ProjectionPoint[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
