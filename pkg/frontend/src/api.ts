/**
 * Typed client for the exploration API. The UI is a pure consumer of the
 * documented GET endpoints; nothing is recomputed client-side.
 */

import type {
  AuthorProfile,
  AuthorSummary,
  DescriptorAuthorsResponse,
  DescriptorSummary,
  EgoResponse,
  SharedResponse,
  SimilarResponse,
  WordcloudResponse,
} from "./types.js";

declare global {
  interface Window {
    UI_API_BASE?: string;
  }
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export function defaultApiBase(): string {
  return typeof window !== "undefined" && window.UI_API_BASE ? window.UI_API_BASE : "";
}

export interface EgoOptions {
  threshold?: number;
  max?: number;
}

export class ApiClient {
  constructor(
    private readonly base: string = defaultApiBase(),
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`);
    if (!response.ok) {
      let code = "error";
      let message = `${response.status}`;
      try {
        const body = await response.json();
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  searchAuthors(q: string, limit = 50): Promise<AuthorSummary[]> {
    return this.get(`/api/authors/search?q=${encodeURIComponent(q)}&limit=${limit}`);
  }

  searchDescriptors(q: string, limit = 50): Promise<DescriptorSummary[]> {
    return this.get(`/api/descriptors/search?q=${encodeURIComponent(q)}&limit=${limit}`);
  }

  descriptorAuthors(name: string): Promise<DescriptorAuthorsResponse> {
    return this.get(`/api/descriptors/${encodeURIComponent(name)}/authors`);
  }

  profile(authorId: string): Promise<AuthorProfile> {
    return this.get(`/api/authors/${encodeURIComponent(authorId)}`);
  }

  ego(authorId: string, options: EgoOptions = {}): Promise<EgoResponse> {
    const params = new URLSearchParams();
    if (options.threshold !== undefined) params.set("threshold", String(options.threshold));
    if (options.max !== undefined) params.set("max", String(options.max));
    const suffix = params.toString() ? `?${params.toString()}` : "";
    return this.get(`/api/authors/${encodeURIComponent(authorId)}/ego${suffix}`);
  }

  similar(authorId: string, k = 10): Promise<SimilarResponse> {
    return this.get(`/api/authors/${encodeURIComponent(authorId)}/similar?k=${k}`);
  }

  shared(a: string, b: string): Promise<SharedResponse> {
    return this.get(
      `/api/authors/${encodeURIComponent(a)}/shared/${encodeURIComponent(b)}`,
    );
  }

  wordcloud(authorId: string, n = 40): Promise<WordcloudResponse> {
    return this.get(`/api/authors/${encodeURIComponent(authorId)}/wordcloud?n=${n}`);
  }
}
