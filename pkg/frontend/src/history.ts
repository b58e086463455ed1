// Query history as a forest: parents precede children, edges follow the
// server-recorded parent_id links (re-seeding from a hit chains queries).

import type { SessionQueryEntry } from "./types.js";

export interface HistoryNode {
  entry: SessionQueryEntry;
  children: HistoryNode[];
}

export function buildHistoryTree(queries: SessionQueryEntry[]): HistoryNode[] {
  const nodes = new Map<string, HistoryNode>();
  for (const entry of queries) {
    nodes.set(entry.query_id, { entry, children: [] });
  }
  const roots: HistoryNode[] = [];
  for (const entry of queries) {
    const node = nodes.get(entry.query_id)!;
    const parent = entry.parent_id ? nodes.get(entry.parent_id) : undefined;
    if (parent && parent !== node) {
      parent.children.push(node);
    } else {
      roots.push(node);
    }
  }
  return roots;
}

export interface FlatNode {
  node: HistoryNode;
  depth: number;
}

/** Depth-first flattening in creation order, for indented rendering. */
export function flattenTree(roots: HistoryNode[]): FlatNode[] {
  const out: FlatNode[] = [];
  const walk = (node: HistoryNode, depth: number) => {
    out.push({ node, depth });
    for (const child of node.children) walk(child, depth + 1);
  };
  for (const root of roots) walk(root, 0);
  return out;
}

export function parentOf(queries: SessionQueryEntry[], queryId: string): string | null {
  const entry = queries.find((q) => q.query_id === queryId);
  return entry ? entry.parent_id : null;
}
