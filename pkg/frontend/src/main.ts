import { ApiClient } from "./api.js";
import { HeatmapView } from "./heatmap.js";
import { MeshView, type MeshRenderer } from "./mesh_view.js";
import { PcpView } from "./pcp.js";
import { SensitivityView } from "./sensitivity_view.js";
import { AppController } from "./state.js";

export interface AppHandles {
  controller: AppController;
  pcp: PcpView;
  sensitivity: SensitivityView;
  heatmap: HeatmapView;
  mesh: MeshView;
}

/** Wire the four views and controls into the document. */
export function mountApp(
  doc: Document,
  api: ApiClient,
  rendererFactory: (el: HTMLElement) => MeshRenderer | null,
  subsampleCount = 2000,
): AppHandles {
  const el = (id: string) => {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as HTMLElement;
  };

  let controller: AppController;
  const pcp = new PcpView(el("pcp"), {
    onBrush: () => void controller.onSelectionChanged(),
    onReorder: (order) => void controller.setAxisOrder(order),
  });
  const sensitivity = new SensitivityView(el("sensitivity"), {
    onSfcBrush: () => void controller.onSelectionChanged(),
    onZoom: (w) => void controller.onZoom(w),
  });
  const heatmap = new HeatmapView(el("heatmap"));
  const mesh = new MeshView(el("mesh"), rendererFactory);
  const api_ = api;
  controller = new AppController(api_, pcp, sensitivity, heatmap, mesh, {
    subsampleCount,
  });

  const mSlider = el("m-slider") as HTMLInputElement;
  mSlider.addEventListener("input", () =>
    void controller.setM(Number(mSlider.value)),
  );
  const fillToggle = el("fill-toggle") as HTMLInputElement;
  fillToggle.addEventListener("change", () =>
    void controller.setFillGaps(fillToggle.checked),
  );
  const opacity = el("opacity-slider") as HTMLInputElement;
  opacity.addEventListener("input", () =>
    controller.setMeshOpacity(Number(opacity.value)),
  );
  const paramSelect = el("param-select") as HTMLSelectElement;
  paramSelect.addEventListener("change", () =>
    void controller.setHeatmapParam(paramSelect.value),
  );

  void controller.init().then(() => {
    const meta = controller.meta;
    if (!meta) return;
    mSlider.max = String(meta.parameters.length);
    mSlider.value = String(controller.m);
    paramSelect.textContent = "";
    for (const p of meta.parameters) {
      const opt = doc.createElement("option");
      opt.value = p.name;
      opt.textContent = p.name;
      paramSelect.appendChild(opt);
    }
    el("dataset-label").textContent =
      `${meta.name}: ${meta.dims.join("x")}, ${meta.runCount} runs, ` +
      `${meta.activeMeasure} sensitivity over a ${meta.curve.kind} curve`;
  });

  return { controller, pcp, sensitivity, heatmap, mesh };
}

declare global {
  interface Window {
    __sensvolApp?: AppHandles;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined" &&
    document.getElementById("pcp")) {
  void (async () => {
    const { ThreeMeshRenderer } = await import("./three_renderer.js");
    window.__sensvolApp = mountApp(
      document,
      new ApiClient(""),
      (container) => new ThreeMeshRenderer(container),
    );
  })();
}
