// Console wiring: pick a dataset and space, seed a query, inspect ranked
// neighbor cards, flag accounts, re-seed from flagged hits, and follow
// the session history tree and the 2-D projection overlay.
//
// The server session is authoritative; reloading the page with
// #<session_id> in the URL reconstructs the entire view from
// GET /sessions/{id}.

import { ApiClient, ApiError } from "./api.js";
import { buildHistoryTree, flattenTree } from "./history.js";
import { attachScatter, type ScatterHandles } from "./scatter.js";
import {
  addSeed,
  addSeeds,
  applyFlag,
  applySession,
  beginQuery,
  clearSeeds,
  endQuery,
  initialViewState,
  recordQueryResponse,
  removeSeed,
  resultFromEntry,
  type ViewState,
} from "./state.js";
import { renderResultsTable } from "./table.js";
import type { FlagValue, Projection } from "./types.js";

const api = new ApiClient("");
const state: ViewState = initialViewState();

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

const datasetSelect = el<HTMLSelectElement>("dataset-select");
const spaceSelect = el<HTMLSelectElement>("space-select");
const kInput = el<HTMLInputElement>("k-input");
const aggregationSelect = el<HTMLSelectElement>("aggregation-select");
const seedInput = el<HTMLInputElement>("seed-input");
const basketEl = el<HTMLElement>("seed-basket");
const queryButton = el<HTMLButtonElement>("query-button");
const statusEl = el<HTMLElement>("status-line");
const resultsBody = el<HTMLTableSectionElement>("results-body");
const resultsEmpty = el<HTMLElement>("results-empty");
const historyEl = el<HTMLElement>("history-tree");
const projectionToggle = el<HTMLButtonElement>("projection-toggle");
const projectionMethod = el<HTMLSelectElement>("projection-method");
const projectionPanel = el<HTMLElement>("projection-panel");
const scatterNotice = el<HTMLElement>("scatter-notice");

let scatter: ScatterHandles | null = null;
let projectionCache: Projection | null = null;

function setStatus(text: string, isError = false): void {
  statusEl.textContent = text;
  statusEl.classList.toggle("error", isError);
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) return `${error.code}: ${error.message}`;
  return String(error);
}

function renderBasket(): void {
  basketEl.replaceChildren();
  for (const id of state.seedBasket) {
    const chip = document.createElement("span");
    chip.className = "chip";
    chip.textContent = id;
    const remove = document.createElement("button");
    remove.textContent = "×";
    remove.title = "remove seed";
    remove.addEventListener("click", () => {
      removeSeed(state, id);
      renderAll();
    });
    chip.appendChild(remove);
    basketEl.appendChild(chip);
  }
  queryButton.disabled = state.seedBasket.length === 0 || state.queryInFlight;
}

function renderResults(): void {
  const flags: Record<string, FlagValue> = {};
  for (const [account, entry] of Object.entries(state.session?.flags ?? {})) {
    flags[account] = entry.flag;
  }
  renderResultsTable(resultsBody, resultsEmpty, state.currentResult, flags, {
    onFlag: (accountId, flag) => void flagAccount(accountId, flag),
    onSeed: (accountId) => {
      addSeed(state, accountId);
      renderAll();
    },
  });
}

function renderHistory(): void {
  historyEl.replaceChildren();
  const queries = state.session?.queries ?? [];
  if (queries.length === 0) {
    const empty = document.createElement("p");
    empty.className = "muted";
    empty.textContent = "no queries yet";
    historyEl.appendChild(empty);
    return;
  }
  for (const { node, depth } of flattenTree(buildHistoryTree(queries))) {
    const item = document.createElement("div");
    item.className = "history-node";
    item.style.marginLeft = `${depth * 18}px`;
    if (node.entry.query_id === state.currentQueryId) item.classList.add("current");
    item.dataset.queryId = node.entry.query_id;
    item.dataset.parentId = node.entry.parent_id ?? "";
    item.textContent =
      `${node.entry.query_id} · ${node.entry.space} · k=${node.entry.k} · ` +
      `seeds: ${node.entry.seeds.join(", ")}`;
    item.addEventListener("click", () => {
      state.currentQueryId = node.entry.query_id;
      state.currentResult = resultFromEntry(node.entry);
      state.seedBasket = [...node.entry.seeds];
      renderAll();
      void hydrateCards();
    });
    historyEl.appendChild(item);
  }
}

function renderProjection(): void {
  projectionPanel.hidden = !state.projectionVisible;
  if (!state.projectionVisible || !scatter || !projectionCache) return;
  const flags: Record<string, FlagValue> = {};
  for (const [account, entry] of Object.entries(state.session?.flags ?? {})) {
    flags[account] = entry.flag;
  }
  scatter.draw(projectionCache.points, flags, new Set(state.seedBasket));
}

function renderAll(): void {
  renderBasket();
  renderResults();
  renderHistory();
  renderProjection();
}

async function hydrateCards(): Promise<void> {
  // History entries persist hit ids only; fetch cards lazily.
  const result = state.currentResult;
  if (!result || result.cards.length > 0 || !state.session) return;
  try {
    const cards = await Promise.all(
      result.result.hits.map((h) => api.account(state.session!.dataset, h.id)),
    );
    result.cards = cards;
    renderResults();
  } catch (error) {
    setStatus(describeError(error), true);
  }
}

async function flagAccount(accountId: string, flag: FlagValue): Promise<void> {
  if (!state.session) return;
  applyFlag(state, accountId, flag);
  renderAll();
  try {
    await api.flag(state.session.session_id, accountId, flag);
    const session = await api.getSession(state.session.session_id);
    state.session.flags = session.flags;
  } catch (error) {
    setStatus(describeError(error), true);
    const session = await api.getSession(state.session.session_id);
    state.session.flags = session.flags;
  }
  renderAll();
}

async function runQuery(): Promise<void> {
  if (!state.session || state.seedBasket.length === 0) return;
  if (!beginQuery(state)) return;
  renderBasket();
  setStatus("querying…");
  try {
    const response = await api.query(state.session.session_id, {
      seeds: [...state.seedBasket],
      k: Math.max(1, Number(kInput.value) || 10),
      space: spaceSelect.value,
      aggregation: aggregationSelect.value,
    });
    recordQueryResponse(state, response);
    const session = await api.getSession(state.session.session_id);
    state.session = session;
    state.activeSpace = session.space;
    setStatus(`query ${response.query_id}: ${response.result.hits.length} neighbors`);
  } catch (error) {
    setStatus(describeError(error), true);
  } finally {
    endQuery(state);
    renderAll();
  }
}

async function toggleProjection(): Promise<void> {
  state.projectionVisible = !state.projectionVisible;
  projectionToggle.textContent = state.projectionVisible ? "hide projection" : "show projection";
  if (state.projectionVisible && state.session) {
    if (!scatter) {
      scatter = attachScatter(el<HTMLCanvasElement>("scatter-canvas"), scatterNotice);
      scatter.onLasso((ids) => {
        const added = addSeeds(state, ids);
        setStatus(`lasso added ${added} account(s) to the seed basket`);
        renderAll();
      });
    }
    try {
      setStatus("computing projection…");
      projectionCache = await api.projection(
        state.session.dataset,
        spaceSelect.value,
        projectionMethod.value,
      );
      setStatus(`projection: ${projectionCache.points.length} points`);
    } catch (error) {
      projectionCache = null;
      setStatus(describeError(error), true);
    }
  }
  renderProjection();
}

async function createSession(): Promise<void> {
  const dataset = datasetSelect.value;
  if (!dataset) return;
  const session = await api.createSession(dataset, spaceSelect.value || undefined);
  applySession(state, session);
  clearSeeds(state);
  projectionCache = null;
  window.location.hash = session.session_id;
  setStatus(`session ${session.session_id} on ${dataset}`);
  renderAll();
}

async function loadSpaces(dataset: string): Promise<void> {
  const spaces = await api.spaces(dataset);
  spaceSelect.replaceChildren();
  for (const space of spaces) {
    const option = document.createElement("option");
    option.value = space.name;
    option.textContent = space.dim ? `${space.name} (${space.kind}, ${space.dim}d)` : space.name;
    spaceSelect.appendChild(option);
  }
}

async function boot(): Promise<void> {
  const datasets = await api.datasets();
  datasetSelect.replaceChildren();
  for (const name of datasets) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    datasetSelect.appendChild(option);
  }

  const fromHash = window.location.hash.replace(/^#/, "");
  if (fromHash) {
    try {
      const session = await api.getSession(fromHash);
      applySession(state, session);
      datasetSelect.value = session.dataset;
      await loadSpaces(session.dataset);
      if (session.space) spaceSelect.value = session.space;
      setStatus(`restored session ${session.session_id}`);
      renderAll();
      void hydrateCards();
      return;
    } catch {
      window.location.hash = "";
    }
  }
  if (datasets.length > 0) {
    datasetSelect.value = datasets[0]!;
    await loadSpaces(datasets[0]!);
    await createSession();
  } else {
    setStatus("no datasets configured on the server", true);
  }
  renderAll();
}

datasetSelect.addEventListener("change", async () => {
  await loadSpaces(datasetSelect.value);
  await createSession();
});
el<HTMLButtonElement>("new-session-button").addEventListener("click", () => void createSession());
queryButton.addEventListener("click", () => void runQuery());
projectionToggle.addEventListener("click", () => void toggleProjection());
el<HTMLButtonElement>("add-seed-button").addEventListener("click", () => {
  const id = seedInput.value.trim();
  if (id) {
    addSeed(state, id);
    seedInput.value = "";
    renderAll();
  }
});
seedInput.addEventListener("keydown", (event) => {
  if (event.key === "Enter") {
    el<HTMLButtonElement>("add-seed-button").click();
  }
});
el<HTMLButtonElement>("clear-seeds-button").addEventListener("click", () => {
  clearSeeds(state);
  renderAll();
});

void boot().catch((error) => setStatus(describeError(error), true));
