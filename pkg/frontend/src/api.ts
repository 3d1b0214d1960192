/** Typed client for the benchmark service HTTP API.
 *
 * This module is the only coupling to the backend: every number the UI
 * displays comes from these endpoints, and no endpoint exposes ground
 * truth before scoring.
 */

export interface SessionInfo {
  session_id: string;
  total_images: number;
  page_size: number;
  n_pages: number;
  in_class_names: string[];
}

export interface PageInfo {
  page_index: number;
  n_pages: number;
  images: { image_id: string }[];
  submitted: boolean;
}

export interface Report {
  auroc: number;
  tpr: number;
  fpr: number;
  per_class_confusions: Record<string, number>;
  n_in: number;
  n_out: number;
  ground_truth: {
    image_id: string;
    source: "in" | "out";
    true_class: string;
    selected_class: string | null;
  }[];
}

export interface CreateSessionRequest {
  in_pool: string;
  out_pool: string;
  total_images: number;
  page_size?: number;
  seed?: number;
  exact_balance?: boolean;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function request<T>(
  base: string,
  path: string,
  init?: RequestInit,
): Promise<T> {
  const resp = await fetch(`${base}${path}`, init);
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      detail = (await resp.json()).detail ?? detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, String(detail));
  }
  return (await resp.json()) as T;
}

export class BenchClient {
  constructor(readonly base: string = "") {}

  createSession(req: CreateSessionRequest): Promise<SessionInfo> {
    return request(this.base, "/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  getPage(sessionId: string, pageIndex: number): Promise<PageInfo> {
    return request(this.base, `/sessions/${sessionId}/pages/${pageIndex}`);
  }

  submitSelections(
    sessionId: string,
    pageIndex: number,
    selections: Record<string, string>,
  ): Promise<{ ok: boolean }> {
    return request(
      this.base,
      `/sessions/${sessionId}/pages/${pageIndex}/selections`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ selections }),
      },
    );
  }

  score(sessionId: string): Promise<Report> {
    return request(this.base, `/sessions/${sessionId}/score`, {
      method: "POST",
    });
  }

  report(sessionId: string): Promise<Report> {
    return request(this.base, `/sessions/${sessionId}/report`);
  }

  imageUrl(sessionId: string, imageId: string): string {
    return `${this.base}/sessions/${sessionId}/images/${imageId}`;
  }
}
