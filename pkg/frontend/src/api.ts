/**
 * Typed client for the studyforge HTTP API. Every view reads exclusively
 * from these response shapes; nothing is computed client-side.
 */

export interface ScoredResult {
  chunk_id: string;
  lexical_score: number;
  dense_score: number;
  fused_score: number;
  boosted: boolean;
}

export interface QueryResponse {
  answer: string;
  artifact_id: string;
  grounding: string[];
  results: ScoredResult[];
}

export interface Slide {
  title: string;
  bullets: string[];
}

export interface PodcastTurn {
  speaker: string;
  line: string;
}

export interface Artifact {
  artifact_id: string;
  kind: "qa" | "summary" | "slides" | "podcast";
  pipeline: string | null;
  doc_id: string | null;
  doc_title: string;
  parsed: string | { slides: Slide[] } | { turns: PodcastTurn[] };
  grounding: string[];
  model_id: string;
  system?: string;
}

export interface ArtifactSummary {
  artifact_id: string;
  kind: string;
  model_id: string;
  system?: string;
}

export interface RubricCategory {
  name: string;
  descriptor: string;
}

export interface ModelsInfo {
  generators: string[];
  judges: string[];
  rubric_categories: RubricCategory[];
}

export interface BlindedPairView {
  pair_id: string;
  outputs: { label: string; content: string }[];
}

export interface ChunkView {
  chunk_id: string;
  doc_id: string;
  doc_title: string;
  text: string;
}

export interface DocInfo {
  doc_id: string;
  title: string;
  year: number | null;
}

/** Structured service failure: carries the error body's code. */
export class ServiceError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number = 0,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(url, init);
  } catch (err) {
    throw new ServiceError("network_error", `service unreachable: ${String(err)}`);
  }
  if (!resp.ok) {
    let code = `http_${resp.status}`;
    let message = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body === "object") {
        code = body.code ?? code;
        message = body.message ?? message;
      }
    } catch {
      // non-JSON error body: keep the status fallback
    }
    throw new ServiceError(code, message, resp.status);
  }
  return (await resp.json()) as T;
}

function post<T>(url: string, body: unknown): Promise<T> {
  return request<T>(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
}

export class ApiClient {
  constructor(private base: string = "") {}

  models(): Promise<ModelsInfo> {
    return request(`${this.base}/models`);
  }

  documents(): Promise<DocInfo[]> {
    return request(`${this.base}/documents`);
  }

  chunk(chunkId: string): Promise<ChunkView> {
    return request(`${this.base}/chunks/${encodeURIComponent(chunkId)}`);
  }

  query(query: string, pipeline: string, k: number, modelId: string): Promise<QueryResponse> {
    return post(`${this.base}/query`, { query, pipeline, k, model_id: modelId });
  }

  generate(body: {
    kind: string;
    doc_id?: string;
    query?: string;
    pipeline?: string;
    model_id?: string;
  }): Promise<Artifact> {
    return post(`${this.base}/generate`, body);
  }

  artifact(artifactId: string): Promise<Artifact> {
    return request(`${this.base}/artifacts/${encodeURIComponent(artifactId)}`);
  }

  artifacts(kind?: string): Promise<ArtifactSummary[]> {
    const suffix = kind ? `?kind=${encodeURIComponent(kind)}` : "";
    return request(`${this.base}/artifacts${suffix}`);
  }

  makePair(artifactIds: [string, string]): Promise<BlindedPairView> {
    return post(`${this.base}/eval/pairs`, { artifact_ids: artifactIds });
  }

  submitVote(pairId: string, winner: "A" | "B" | "TIE", raterId: string): Promise<unknown> {
    return post(`${this.base}/eval/pair`, { pair_id: pairId, winner, rater_id: raterId });
  }

  submitGraded(artifactId: string, raterId: string, scores: Record<string, number>): Promise<unknown> {
    return post(`${this.base}/eval/graded`, {
      artifact_id: artifactId,
      rater_id: raterId,
      scores,
    });
  }
}
