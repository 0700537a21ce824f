/** Shapes of the JSON bodies the exploration API returns. */

export interface AuthorSummary {
  author_id: string;
  display_name: string;
  nb_publications: number;
}

export interface EgoNode extends AuthorSummary {
  selected?: boolean;
}

export type EdgeKind = "primary" | "secondary";

export interface EgoEdge {
  author_a: string;
  author_b: string;
  score: number;
  kind: EdgeKind;
}

export interface EgoResponse {
  center: string;
  nodes: EgoNode[];
  edges: EgoEdge[];
}

export interface SharedDescriptorRow {
  name: string;
  weight_a: number;
  weight_b: number;
  rank_score: number;
}

export interface SharedResponse {
  author_a: string;
  author_b: string;
  descriptors: SharedDescriptorRow[];
}

export interface WordcloudRow {
  name: string;
  weight: number;
}

export interface WordcloudResponse {
  author_id: string;
  descriptors: WordcloudRow[];
}

export interface DescriptorSummary {
  name: string;
  corpus_frequency: number;
}

export interface DescriptorAuthorsResponse {
  descriptor: string;
  authors: AuthorSummary[];
}

export interface PeriodCounts {
  nb_publications: number;
  nb_publications_first_author: number;
  nb_publications_non_first_author: number;
  nb_publications_corresponding: number;
}

export interface AuthorProfile extends AuthorSummary {
  periods: Record<string, PeriodCounts>;
  top_descriptors: WordcloudRow[];
}

export interface SimilarAuthorRow {
  author_id: string;
  display_name: string;
  score: number;
}

export interface SimilarResponse {
  author_id: string;
  results: SimilarAuthorRow[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
