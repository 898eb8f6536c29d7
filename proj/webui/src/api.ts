// Thin client for the personalization service's JSON API.

export type Method = "masked" | "average" | "weighted";

export interface EnhanceResponse {
  image: string; // base64 PNG
  method: Method;
  i_new: number;
  predicted_style_norm: number;
  width: number;
  height: number;
  attention?: number[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }

  /** One line for the error toast. */
  describe(): string {
    return `${this.code} (${this.status}): ${this.message}`;
  }
}

type Fetch = typeof fetch;

export class ServiceClient {
  private inflight: AbortController | null = null;

  constructor(
    private readonly base: string,
    private readonly fetchFn: Fetch = (...args) => fetch(...args),
  ) {}

  private async call<T>(method: string, path: string, body?: unknown, signal?: AbortSignal): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchFn(this.base + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
        signal,
      });
    } catch (e) {
      if ((e as Error).name === "AbortError") throw e;
      throw new ApiError(0, "network_error", `cannot reach the service: ${(e as Error).message}`);
    }
    const text = await res.text();
    let json: unknown = undefined;
    try {
      json = text ? JSON.parse(text) : {};
    } catch {
      throw new ApiError(res.status, "bad_response", `non-JSON response: ${text.slice(0, 120)}`);
    }
    if (!res.ok) {
      const err = json as { code?: string; message?: string };
      throw new ApiError(res.status, err.code ?? "http_error", err.message ?? res.statusText);
    }
    return json as T;
  }

  health() {
    return this.call<{ status: string; model_id: string; sessions: number }>("GET", "/healthz");
  }

  async createSession(modelId?: string): Promise<string> {
    const r = await this.call<{ session_id: string }>("POST", "/sessions", modelId ? { model_id: modelId } : {});
    return r.session_id;
  }

  async pairCount(sessionId: string): Promise<number> {
    return (await this.call<{ count: number }>("GET", `/sessions/${sessionId}`)).count;
  }

  async addPair(sessionId: string, originalPng: string, retouchedPng: string): Promise<number> {
    const r = await this.call<{ count: number }>("POST", `/sessions/${sessionId}/pairs`, {
      original: originalPng,
      retouched: retouchedPng,
    });
    return r.count;
  }

  async deletePair(sessionId: string, index: number): Promise<number> {
    return (await this.call<{ count: number }>("DELETE", `/sessions/${sessionId}/pairs/${index}`)).count;
  }

  /**
   * Enhances an unseen image. A newer call aborts the one still in flight;
   * the superseded promise resolves to null.
   */
  async enhance(sessionId: string, imagePng: string, method: Method): Promise<EnhanceResponse | null> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      return await this.call<EnhanceResponse>(
        "POST",
        `/sessions/${sessionId}/enhance`,
        { image: imagePng, method },
        controller.signal,
      );
    } catch (e) {
      if ((e as Error).name === "AbortError") return null;
      throw e;
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }
}
