// End-to-end against the real backend: build a planted dataset with the
// CLI, boot the service, then drive the console's API client and state
// layer through the triage loop: create session -> query a planted seed
// -> flag the top hit -> re-seed from it -> verify the history tree
// chains parent to child, and that a "page reload" (fresh state rebuilt
// from GET /sessions/{id}) reproduces the view.
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { buildHistoryTree } from "../src/history.js";
import { applySession, flagOf, initialViewState, recordQueryResponse } from "../src/state.js";

const PORT = 8777;
const BASE = `http://127.0.0.1:${PORT}`;

let workDir: string;
let server: ChildProcess | null = null;
const api = new ApiClient(BASE);

function run(args: string[]): void {
  const proc = spawnSync("python3", ["-m", "accountsim", ...args], {
    cwd: workDir,
    encoding: "utf-8",
  });
  if (proc.status !== 0) {
    throw new Error(`accountsim ${args[0]} failed: ${proc.stderr}`);
  }
}

async function waitForHealth(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const health = await api.health();
      if (health.status === "ok") return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("service did not become healthy in time");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "console-e2e-"));
  run(["gen", "--blocks", "15,15", "--intra", "0.3", "--inter", "0.03",
       "--noise", "0.15", "--doc-len", "60", "--vocab-per-class", "25",
       "--seed", "4", "--out", "gen"]);
  run(["ingest", "--edges", "gen/edges.csv", "--texts", "gen/texts.csv",
       "--labels", "gen/labels.csv", "--out", "data/demo"]);
  run(["embed", "--dataset", "data/demo", "--model", "lsa", "--dim", "6", "--min-df", "1"]);
  run(["embed", "--dataset", "data/demo", "--model", "cosine", "--min-df", "1"]);
  server = spawn("python3", ["-m", "accountsim", "serve", "--data-dir", "data",
                             "--sessions-dir", "sessions", "--port", String(PORT)],
                 { cwd: workDir, stdio: "ignore" });
  await waitForHealth();
});

afterAll(() => {
  server?.kill();
  rmSync(workDir, { recursive: true, force: true });
});

describe("console end-to-end against the live service", () => {
  it("lists datasets and spaces", async () => {
    expect(await api.datasets()).toEqual(["demo"]);
    const spaces = await api.spaces("demo");
    expect(spaces.map((s) => s.name).sort()).toEqual(["cosine", "lsa"]);
  });

  it("runs the full triage loop and survives a reload", async () => {
    const state = initialViewState();

    // Create a session and query a planted seed.
    const session = await api.createSession("demo", "lsa");
    applySession(state, session);
    const q1 = await api.query(session.session_id, { seeds: ["n00"], k: 5 });
    recordQueryResponse(state, q1);
    expect(q1.parent_id).toBeNull();
    expect(q1.result.hits).toHaveLength(5);
    expect(q1.cards).toHaveLength(5);
    expect(q1.cards.every((c) => c.n_posts >= 1)).toBe(true);

    // Flag the top hit, then re-seed from it.
    const topHit = q1.result.hits[0]!.id;
    await api.flag(session.session_id, topHit, "suspicious");
    const q2 = await api.query(session.session_id, { seeds: [topHit], k: 4 });

    // The history tree must chain q2 under q1.
    expect(q2.parent_id).toBe(q1.query_id);
    const refreshed = await api.getSession(session.session_id);
    const roots = buildHistoryTree(refreshed.queries);
    expect(roots).toHaveLength(1);
    expect(roots[0]!.entry.query_id).toBe(q1.query_id);
    expect(roots[0]!.children.map((c) => c.entry.query_id)).toEqual([q2.query_id]);

    // "Page reload": a brand-new view state built only from the server.
    const reloaded = initialViewState();
    applySession(reloaded, await api.getSession(session.session_id));
    expect(reloaded.session!.session_id).toBe(session.session_id);
    expect(reloaded.currentQueryId).toBe(q2.query_id);
    expect(reloaded.seedBasket).toEqual([topHit]);
    expect(reloaded.currentResult!.result.hits.map((h) => h.id)).toEqual(
      q2.result.hits.map((h) => h.id),
    );
    expect(flagOf(reloaded, topHit)).toBe("suspicious");

    // Export equals the session view (no console-side divergence).
    const exported = await api.exportSession(session.session_id);
    expect(exported).toEqual(await api.getSession(session.session_id));
  });

  it("retrying a query with the same request id does not duplicate history", async () => {
    const session = await api.createSession("demo", "lsa");
    const first = await api.query(session.session_id, { seeds: ["n01"], k: 3 }, "retry-1");
    const second = await api.query(session.session_id, { seeds: ["n01"], k: 3 }, "retry-1");
    expect(second).toEqual(first);
    const current = await api.getSession(session.session_id);
    expect(current.queries).toHaveLength(1);
  });

  it("surfaces API error codes for the UI", async () => {
    const session = await api.createSession("demo");
    await expect(
      api.query(session.session_id, { seeds: ["n00"], k: 5, space: "nope" }),
    ).rejects.toMatchObject({ code: "space_not_found", status: 404 });
    await expect(
      api.query(session.session_id, { seeds: ["n00"], k: 0, space: "lsa" }),
    ).rejects.toMatchObject({ code: "invalid_k" });
  });

  it("serves projections for the scatter overlay", async () => {
    const projection = await api.projection("demo", "lsa", "pca");
    expect(projection.points).toHaveLength(30);
    const point = projection.points[0]!;
    expect(typeof point.x).toBe("number");
    expect(point.label === 0 || point.label === 1).toBe(true);
  });
});
