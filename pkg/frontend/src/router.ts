/**
 * Hash-based routing. Every view is URL-addressable so deep links reproduce
 * the exact search / graph / arc / descriptor state.
 *
 *   #/search/author?q=smi
 *   #/search/descriptor?q=anode
 *   #/author/A123?secondary=1&arc=A123~A456
 *   #/descriptor/solid%20electrolyte
 */

export type SearchMode = "author" | "descriptor";

export type Route =
  | { view: "search"; mode: SearchMode; q: string }
  | { view: "author"; id: string; secondary: boolean; arc: [string, string] | null }
  | { view: "descriptor"; name: string };

export const HOME: Route = { view: "search", mode: "author", q: "" };

const ARC_SEPARATOR = "~";

export function buildHash(route: Route): string {
  switch (route.view) {
    case "search": {
      const q = route.q ? `?q=${encodeURIComponent(route.q)}` : "";
      return `#/search/${route.mode}${q}`;
    }
    case "author": {
      const params = new URLSearchParams();
      if (route.secondary) params.set("secondary", "1");
      if (route.arc) params.set("arc", route.arc.join(ARC_SEPARATOR));
      const suffix = params.toString() ? `?${params.toString()}` : "";
      return `#/author/${encodeURIComponent(route.id)}${suffix}`;
    }
    case "descriptor":
      return `#/descriptor/${encodeURIComponent(route.name)}`;
  }
}

export function parseHash(hash: string): Route {
  const trimmed = hash.replace(/^#\/?/, "");
  if (!trimmed) return HOME;
  const [pathPart, queryPart] = splitOnce(trimmed, "?");
  const params = new URLSearchParams(queryPart ?? "");
  const segments = pathPart.split("/").map((s) => decodeURIComponent(s));

  if (segments[0] === "search") {
    const mode: SearchMode = segments[1] === "descriptor" ? "descriptor" : "author";
    return { view: "search", mode, q: params.get("q") ?? "" };
  }
  if (segments[0] === "author" && segments[1]) {
    const arcRaw = params.get("arc");
    let arc: [string, string] | null = null;
    if (arcRaw) {
      const [a, b] = splitOnce(arcRaw, ARC_SEPARATOR);
      if (a && b) arc = [a, b];
    }
    return {
      view: "author",
      id: segments[1],
      secondary: params.get("secondary") === "1",
      arc,
    };
  }
  if (segments[0] === "descriptor" && segments[1]) {
    return { view: "descriptor", name: segments[1] };
  }
  return HOME;
}

function splitOnce(value: string, separator: string): [string, string | undefined] {
  const index = value.indexOf(separator);
  if (index === -1) return [value, undefined];
  return [value.slice(0, index), value.slice(index + separator.length)];
}
