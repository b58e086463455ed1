// Console view state. The server session is the only authoritative
// store: everything here is reconstructible from GET /sessions/{id}
// plus local UI preferences.

import type { FlagValue, QueryResponse, Session, SessionQueryEntry } from "./types.js";

export type FlagFilter = "all" | FlagValue;

export interface ViewState {
  session: Session | null;
  activeSpace: string | null;
  seedBasket: string[];
  currentQueryId: string | null;
  currentResult: QueryResponse | null;
  flagFilter: FlagFilter;
  projectionVisible: boolean;
  queryInFlight: boolean;
}

export function initialViewState(): ViewState {
  return {
    session: null,
    activeSpace: null,
    seedBasket: [],
    currentQueryId: null,
    currentResult: null,
    flagFilter: "all",
    projectionVisible: false,
    queryInFlight: false,
  };
}

export function addSeed(state: ViewState, accountId: string): boolean {
  if (state.seedBasket.includes(accountId)) return false;
  state.seedBasket.push(accountId);
  return true;
}

export function addSeeds(state: ViewState, accountIds: string[]): number {
  let added = 0;
  for (const id of accountIds) {
    if (addSeed(state, id)) added += 1;
  }
  return added;
}

export function removeSeed(state: ViewState, accountId: string): void {
  state.seedBasket = state.seedBasket.filter((id) => id !== accountId);
}

export function clearSeeds(state: ViewState): void {
  state.seedBasket = [];
}

/** One query in flight per session, enforced client-side. */
export function beginQuery(state: ViewState): boolean {
  if (state.queryInFlight) return false;
  state.queryInFlight = true;
  return true;
}

export function endQuery(state: ViewState): void {
  state.queryInFlight = false;
}

export function flagOf(state: ViewState, accountId: string): FlagValue | null {
  return state.session?.flags[accountId]?.flag ?? null;
}

/** Optimistic flag update; the server response reconciles via applyFlag. */
export function applyFlag(state: ViewState, accountId: string, flag: FlagValue, at?: string): void {
  if (!state.session) return;
  state.session.flags[accountId] = { flag, at: at ?? new Date().toISOString() };
}

/** Rebuild a QueryResponse-shaped view of a persisted history entry. */
export function resultFromEntry(entry: SessionQueryEntry): QueryResponse {
  return {
    query_id: entry.query_id,
    parent_id: entry.parent_id,
    result: {
      seeds: entry.seeds,
      space: entry.space,
      k: entry.k,
      score_kind: "distance",
      hits: entry.hit_ids.map((id, i) => ({ id, score: Number.NaN, rank: i + 1 })),
    },
    cards: [],
  };
}

/**
 * Reconstruct the whole view from a server session (the page-reload
 * path). The latest query becomes the current result; its seeds fill
 * the basket so the analyst can continue where they left off.
 */
export function applySession(state: ViewState, session: Session): void {
  state.session = session;
  state.activeSpace = session.space;
  const last = session.queries[session.queries.length - 1];
  if (last) {
    state.currentQueryId = last.query_id;
    state.currentResult = resultFromEntry(last);
    state.seedBasket = [...last.seeds];
  } else {
    state.currentQueryId = null;
    state.currentResult = null;
    state.seedBasket = [];
  }
  state.queryInFlight = false;
}

export function recordQueryResponse(state: ViewState, response: QueryResponse): void {
  state.currentQueryId = response.query_id;
  state.currentResult = response;
}

export function visibleFlags(state: ViewState): Record<string, FlagValue> {
  const out: Record<string, FlagValue> = {};
  const flags = state.session?.flags ?? {};
  for (const [account, entry] of Object.entries(flags)) {
    if (state.flagFilter === "all" || entry.flag === state.flagFilter) {
      out[account] = entry.flag;
    }
  }
  return out;
}
