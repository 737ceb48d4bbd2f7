import type {
  HeatmapPayload,
  MeshPayload,
  MetaPayload,
  PcpPayload,
  SensitivityViewPayload,
} from "../src/types.js";

export interface LoggedRequest {
  method: string;
  url: string;
  body: unknown;
}

/** Canned service: logs every request and answers with consistent payloads. */
export class FakeService {
  log: LoggedRequest[] = [];
  private nextSelection = 1;
  axisOrder: string[] | null = null;
  readonly params = ["P1", "P2", "P3"];

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    this.log.push({ method, url, body });
    const u = new URL(url, "http://test");
    const path = u.pathname;
    const q = u.searchParams;

    const json = (doc: unknown) =>
      new Response(JSON.stringify(doc), {
        status: 200,
        headers: { "Content-Type": "application/json" },
      });

    if (path === "/api/meta") return json(this.meta());
    if (path === "/api/pcp") return json(this.pcp(q.get("selection")));
    if (path === "/api/sensitivity-view")
      return json(this.sensitivityView(Number(q.get("m") ?? "3")));
    if (path === "/api/selection" && method === "POST") {
      const id = String(this.nextSelection++);
      return json({ v: 1, id, voxelCount: 10 });
    }
    if (path === "/api/heatmap")
      return json(this.heatmap(q.get("selection")!, q.get("fill") === "1"));
    if (path === "/api/mesh") return json(this.mesh(q.get("selection")!));
    if (path === "/api/axis-order" && method === "POST") {
      this.axisOrder = (body as { order: string[] }).order;
      return json({ v: 1, order: this.axisOrder });
    }
    return new Response("not found", { status: 404 });
  };

  requests(method: string, path: string): LoggedRequest[] {
    return this.log.filter(
      (r) => r.method === method && new URL(r.url, "http://t").pathname === path,
    );
  }

  clear(): void {
    this.log = [];
  }

  meta(): MetaPayload {
    return {
      v: 1,
      name: "synthetic",
      dims: [4, 4, 4],
      voxelCount: 64,
      runCount: 20,
      parameters: this.params.map((p) => ({ name: p, min: 0, max: 1 })),
      aux: [],
      measures: ["delta"],
      activeMeasure: "delta",
      curve: { kind: "datadriven", file: "curve.sfc", alpha: 0.1, distance: "l1" },
      m: 3,
      subsample: { seed: 0, count: 2000 },
      axisOrder: this.axisOrder,
    };
  }

  private order(): string[] {
    return this.axisOrder ?? this.params;
  }

  pcp(selection: string | null): PcpPayload {
    const doc: PcpPayload = {
      v: 1,
      measure: "delta",
      axes: this.order().map((p) => ({
        name: p,
        mean: 0.4,
        sensitiveFraction: 0.5,
      })),
      auxAxes: [{ name: "prob", min: 0, max: 1 }],
      scale: { min: 0, max: 1 },
      polylines: [
        [0.1, 0.2, 0.3, 0.5],
        [0.6, 0.1, 0.2, 0.9],
      ],
      sampleIndices: [3, 17],
    };
    if (selection) {
      doc.selectedMask = [true, false];
      doc.selectionId = selection;
    }
    return doc;
  }

  sensitivityView(m: number): SensitivityViewPayload {
    const order = this.order();
    const horizon = order.slice(0, m).map((name) => ({
      name,
      fullBands: [0, 1, 2, 0],
      topFill: [0.5, 0.25, 1.0, 0],
    }));
    const lineFields = order.slice(m);
    return {
      v: 1,
      measure: "delta",
      bandWidth: 0.2,
      positions: [0, 20, 40, 60],
      curveLength: 64,
      horizon,
      lineFields,
      lineValues: lineFields.map(() => [0.1, 0.2, 0.1, 0.05]),
      drawOrder: lineFields,
      colorRamp: { band0: "gray", bands: "white-to-red" },
    };
  }

  heatmap(selection: string, fill: boolean): HeatmapPayload {
    const values: (number | null)[][] = [
      [1.0, fill ? 1.5 : null],
      [2.0, 3.0],
    ];
    return {
      v: 1,
      param: "P1",
      paramRange: [0, 1],
      bins: [2, 2],
      selectionId: selection,
      selectionSize: 10,
      values,
      colorMap: { name: "magma", rgb: [[0, 0, 0], [255, 255, 255]] },
    };
  }

  mesh(selection: string): MeshPayload {
    return {
      v: 1,
      selectionId: selection,
      triangleCount: 1,
      vertices: [0, 0, 0, 1, 0, 0, 0, 1, 0],
      triangles: [0, 1, 2],
    };
  }
}

export function appDom(doc: Document): void {
  doc.body.innerHTML = `
    <span id="dataset-label"></span>
    <input id="m-slider" type="range" min="0" max="3" value="3" />
    <input id="fill-toggle" type="checkbox" />
    <select id="param-select"></select>
    <input id="opacity-slider" type="range" min="0" max="1" step="0.05" value="0.85" />
    <div id="pcp"></div>
    <div id="sensitivity"></div>
    <div id="heatmap"></div>
    <div id="mesh"></div>`;
}

export async function flush(turns = 8): Promise<void> {
  for (let i = 0; i < turns; i++) {
    await new Promise((r) => setTimeout(r, 0));
  }
}
