import type {
  HeatmapPayload,
  Interval,
  MeshPayload,
  MetaPayload,
  PcpPayload,
  SelectionResponse,
  SensitivityViewPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the service endpoints. */
export class ApiClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {}

  private async getJson<T>(path: string, params?: Record<string, unknown>): Promise<T> {
    const q = params
      ? "?" +
        Object.entries(params)
          .filter(([, v]) => v !== undefined && v !== null)
          .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`)
          .join("&")
      : "";
    const r = await this.fetchImpl(`${this.base}${path}${q}`);
    if (!r.ok) {
      throw new Error(`${path} failed: ${r.status} ${await r.text()}`);
    }
    return (await r.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const r = await this.fetchImpl(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!r.ok) {
      throw new Error(`${path} failed: ${r.status} ${await r.text()}`);
    }
    return (await r.json()) as T;
  }

  meta(): Promise<MetaPayload> {
    return this.getJson("/api/meta");
  }

  pcp(opts: {
    filterPct?: number;
    seed?: number;
    count?: number;
    selection?: string;
  }): Promise<PcpPayload> {
    return this.getJson("/api/pcp", opts);
  }

  sensitivityView(opts: {
    m?: number;
    seed?: number;
    count?: number;
  }): Promise<SensitivityViewPayload> {
    return this.getJson("/api/sensitivity-view", opts);
  }

  postSelection(
    brushes: Record<string, Interval>,
    sfcIntervals: Interval[],
  ): Promise<SelectionResponse> {
    return this.postJson("/api/selection", {
      pcpBrushes: Object.keys(brushes).length ? brushes : null,
      sfcIntervals: sfcIntervals.length ? sfcIntervals : null,
    });
  }

  heatmap(opts: {
    param: string;
    selection: string;
    fill: 0 | 1;
    paramBins?: number;
    curveBins?: number;
  }): Promise<HeatmapPayload> {
    return this.getJson("/api/heatmap", opts);
  }

  mesh(selection: string): Promise<MeshPayload> {
    return this.getJson("/api/mesh", { selection });
  }

  postAxisOrder(order: string[]): Promise<{ v: number; order: string[] }> {
    return this.postJson("/api/axis-order", { order });
  }
}
