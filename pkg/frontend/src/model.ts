/**
 * View-model construction for the similarity map. The server body is the
 * source of truth; this layer only filters (secondary toggle), styles, and
 * sizes what it was given.
 */

import type { EgoResponse, EdgeKind } from "./types.js";

export interface GraphNodeVM {
  id: string;
  label: string;
  nbPublications: number;
  radius: number;
  selected: boolean;
  x: number;
  y: number;
}

export interface GraphEdgeVM {
  source: string;
  target: string;
  kind: EdgeKind;
  score: number;
  focused: boolean;
}

export interface GraphViewModel {
  nodes: GraphNodeVM[];
  edges: GraphEdgeVM[];
  focusedArc: [string, string] | null;
}

/** Circle radius in px; strictly monotone non-decreasing in publication count. */
export function radiusFromPublications(nbPublications: number): number {
  return 6 + 3 * Math.sqrt(Math.max(0, nbPublications));
}

export interface BuildOptions {
  showSecondary: boolean;
  focusedArc?: [string, string] | null;
}

function samePair(edge: GraphEdgeVM, arc: [string, string]): boolean {
  return (
    (edge.source === arc[0] && edge.target === arc[1]) ||
    (edge.source === arc[1] && edge.target === arc[0])
  );
}

export function buildGraphViewModel(ego: EgoResponse, options: BuildOptions): GraphViewModel {
  const focusedArc = options.focusedArc ?? null;
  const edges: GraphEdgeVM[] = ego.edges
    .filter((e) => options.showSecondary || e.kind === "primary")
    .map((e) => ({
      source: e.author_a,
      target: e.author_b,
      kind: e.kind,
      score: e.score,
      focused: false,
    }));
  const visible = new Set<string>([ego.center]);
  for (const edge of edges) {
    visible.add(edge.source);
    visible.add(edge.target);
  }
  const nodes: GraphNodeVM[] = ego.nodes
    .filter((n) => visible.has(n.author_id))
    .map((n) => ({
      id: n.author_id,
      label: n.display_name,
      nbPublications: n.nb_publications,
      radius: radiusFromPublications(n.nb_publications),
      selected: n.author_id === ego.center,
      x: 0,
      y: 0,
    }));
  if (focusedArc) {
    for (const edge of edges) {
      if (samePair(edge, focusedArc)) edge.focused = true;
    }
  }
  return { nodes, edges, focusedArc };
}
