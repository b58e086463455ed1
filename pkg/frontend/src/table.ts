// Neighbor table: ranked hits with account stats, flag controls, and a
// "seed" action that feeds the basket.

import type { AccountCard, FlagValue, QueryResponse } from "./types.js";

export interface TableHandlers {
  onFlag(accountId: string, flag: FlagValue): void;
  onSeed(accountId: string): void;
}

export type SortKey = "rank" | "score" | "n_posts" | "retweet_fraction" | "randstring";

export interface RowView {
  id: string;
  rank: number;
  score: number;
  card: AccountCard | null;
}

export function buildRows(response: QueryResponse): RowView[] {
  const cards = new Map(response.cards.map((c) => [c.account_id, c]));
  return response.result.hits.map((h) => ({
    id: h.id,
    rank: h.rank,
    score: h.score,
    card: cards.get(h.id) ?? null,
  }));
}

export function sortRows(rows: RowView[], key: SortKey, ascending: boolean): RowView[] {
  const value = (r: RowView): number => {
    switch (key) {
      case "rank":
        return r.rank;
      case "score":
        return r.score;
      case "n_posts":
        return r.card?.n_posts ?? -1;
      case "retweet_fraction":
        return r.card?.retweet_fraction ?? -1;
      case "randstring":
        return r.card?.randstring_probability ?? -1;
    }
  };
  return [...rows].sort((a, b) => {
    const diff = value(a) - value(b);
    if (Number.isNaN(diff) || diff === 0) return a.id.localeCompare(b.id);
    return ascending ? diff : -diff;
  });
}

function fmt(value: number | null | undefined, digits = 3): string {
  if (value === null || value === undefined || Number.isNaN(value)) return "–";
  return value.toFixed(digits);
}

const FLAGS: FlagValue[] = ["suspicious", "benign", "unknown"];

export function renderResultsTable(
  tbody: HTMLTableSectionElement,
  emptyEl: HTMLElement,
  response: QueryResponse | null,
  flags: Record<string, FlagValue>,
  handlers: TableHandlers,
  sort: { key: SortKey; ascending: boolean } = { key: "rank", ascending: true },
): void {
  tbody.replaceChildren();
  if (!response || response.result.hits.length === 0) {
    emptyEl.hidden = false;
    emptyEl.textContent = response
      ? "the query returned no neighbors"
      : "run a query to see neighbors";
    return;
  }
  emptyEl.hidden = true;
  for (const row of sortRows(buildRows(response), sort.key, sort.ascending)) {
    const tr = document.createElement("tr");
    tr.dataset.accountId = row.id;
    const flag = flags[row.id];
    if (flag) tr.classList.add(`flag-${flag}`);

    const cells: (string | HTMLElement)[] = [
      String(row.rank),
      row.id,
      row.card?.screen_name ?? "",
      fmt(row.score),
      row.card ? String(row.card.n_posts) : "–",
      row.card ? `${(row.card.retweet_fraction * 100).toFixed(0)}%` : "–",
      fmt(row.card?.randstring_probability ?? null, 2),
      row.card?.top_hashtags.join(" ") ?? "",
    ];
    for (const content of cells) {
      const td = document.createElement("td");
      if (typeof content === "string") td.textContent = content;
      else td.appendChild(content);
      tr.appendChild(td);
    }

    const actions = document.createElement("td");
    actions.className = "actions";
    for (const value of FLAGS) {
      const button = document.createElement("button");
      button.textContent = value[0]!.toUpperCase();
      button.title = `flag ${value}`;
      button.className = flag === value ? `active flag-${value}` : "";
      button.addEventListener("click", () => handlers.onFlag(row.id, value));
      actions.appendChild(button);
    }
    const seedButton = document.createElement("button");
    seedButton.textContent = "seed";
    seedButton.title = "add to seed basket";
    seedButton.addEventListener("click", () => handlers.onSeed(row.id));
    actions.appendChild(seedButton);
    tr.appendChild(actions);
    tbody.appendChild(tr);
  }
}
