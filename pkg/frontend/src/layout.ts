/**
 * Small deterministic force layout: seeded initial ring, fixed iteration
 * count, no randomness beyond the seed. Same input + seed = same positions,
 * which keeps graph renders snapshot-stable.
 */

import type { GraphViewModel } from "./model.js";

/** Deterministic 32-bit PRNG (mulberry32). */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface LayoutOptions {
  width: number;
  height: number;
  seed?: number;
  iterations?: number;
}

export function layoutGraph(vm: GraphViewModel, options: LayoutOptions): GraphViewModel {
  const { width, height } = options;
  const rand = mulberry32(options.seed ?? 42);
  const iterations = options.iterations ?? 150;
  const cx = width / 2;
  const cy = height / 2;

  const ordered = [...vm.nodes].sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  const ringRadius = Math.min(width, height) / 3;
  ordered.forEach((node, i) => {
    if (node.selected) {
      node.x = cx;
      node.y = cy;
      return;
    }
    const angle = (2 * Math.PI * i) / Math.max(1, ordered.length) + rand() * 0.5;
    node.x = cx + ringRadius * Math.cos(angle);
    node.y = cy + ringRadius * Math.sin(angle);
  });

  const byId = new Map(vm.nodes.map((n) => [n.id, n]));
  const springLength = ringRadius * 0.9;

  for (let iter = 0; iter < iterations; iter++) {
    const cooling = 1 - iter / iterations;
    // pairwise repulsion
    for (let i = 0; i < ordered.length; i++) {
      for (let j = i + 1; j < ordered.length; j++) {
        const a = ordered[i];
        const b = ordered[j];
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let dist = Math.hypot(dx, dy);
        if (dist < 1e-6) {
          // deterministic nudge for coincident nodes
          dx = 0.01 * (i + 1);
          dy = 0.01 * (j + 1);
          dist = Math.hypot(dx, dy);
        }
        const push = (2000 / (dist * dist)) * cooling;
        const ux = (dx / dist) * push;
        const uy = (dy / dist) * push;
        if (!a.selected) {
          a.x -= ux;
          a.y -= uy;
        }
        if (!b.selected) {
          b.x += ux;
          b.y += uy;
        }
      }
    }
    // spring attraction along edges
    for (const edge of vm.edges) {
      const a = byId.get(edge.source);
      const b = byId.get(edge.target);
      if (!a || !b) continue;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const dist = Math.max(1e-6, Math.hypot(dx, dy));
      const pull = 0.02 * (dist - springLength) * cooling;
      const ux = (dx / dist) * pull;
      const uy = (dy / dist) * pull;
      if (!a.selected) {
        a.x += ux;
        a.y += uy;
      }
      if (!b.selected) {
        b.x -= ux;
        b.y -= uy;
      }
    }
    // gentle centering so disconnected nodes stay on screen
    for (const node of ordered) {
      if (node.selected) continue;
      node.x += (cx - node.x) * 0.01 * cooling;
      node.y += (cy - node.y) * 0.01 * cooling;
    }
  }

  const margin = 20;
  for (const node of ordered) {
    node.x = Math.min(width - margin, Math.max(margin, node.x));
    node.y = Math.min(height - margin, Math.max(margin, node.y));
  }
  return vm;
}
