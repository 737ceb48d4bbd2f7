import { ApiClient } from "./api.js";
import { HeatmapView } from "./heatmap.js";
import { MeshView } from "./mesh_view.js";
import { PcpView } from "./pcp.js";
import { SensitivityView } from "./sensitivity_view.js";
import type { Interval, MetaPayload } from "./types.js";

export interface ControllerOptions {
  subsampleCount?: number;
}

/**
 * Linking controller: every brush edit resolves to exactly one selection
 * POST, after which the dependent views refresh in order (PCP highlight,
 * sensitivity overlay, heatmap, mesh), all against the same selection id.
 * In-flight refreshes are superseded by newer interactions.
 */
export class AppController {
  meta: MetaPayload | null = null;
  selectionId: string | null = null;
  selectionCount = 0;
  heatmapParam: string | null = null;
  fillGaps = false;
  m = 0;
  private epoch = 0;
  private subsampleCount: number;

  constructor(
    readonly api: ApiClient,
    readonly pcp: PcpView,
    readonly sensitivity: SensitivityView,
    readonly heatmap: HeatmapView,
    readonly mesh: MeshView,
    opts: ControllerOptions = {},
  ) {
    this.subsampleCount = opts.subsampleCount ?? 2000;
  }

  async init(): Promise<void> {
    this.meta = await this.api.meta();
    this.m = this.meta.m;
    this.heatmapParam = this.meta.parameters[0]?.name ?? null;
    await this.refreshStaticViews();
    await this.onSelectionChanged();
  }

  private async refreshStaticViews(): Promise<void> {
    const pcpPayload = await this.api.pcp({
      count: this.subsampleCount,
      selection: this.selectionId ?? undefined,
    });
    this.pcp.render(pcpPayload);
    const sv = await this.api.sensitivityView({
      m: this.m,
      count: this.subsampleCount,
    });
    this.sensitivity.render(sv);
  }

  /** One selection POST per interaction, then the linked refresh chain. */
  async onSelectionChanged(): Promise<void> {
    const epoch = ++this.epoch;
    const brushes = this.pcp.getBrushes();
    const intervals = this.sensitivity.getIntervals();
    const res = await this.api.postSelection(brushes, intervals);
    if (epoch !== this.epoch) return; // superseded by a newer interaction
    this.selectionId = res.id;
    this.selectionCount = res.voxelCount;
    // 1. PCP highlight
    const pcpPayload = await this.api.pcp({
      count: this.subsampleCount,
      selection: res.id,
    });
    if (epoch !== this.epoch) return;
    this.pcp.render(pcpPayload);
    // 2. sensitivity-view overlay is client-side (gray boxes already drawn)
    // 3. heatmap
    await this.refreshHeatmap(epoch);
    // 4. mesh
    if (epoch !== this.epoch) return;
    const mesh = await this.api.mesh(res.id);
    if (epoch !== this.epoch) return;
    this.mesh.render(mesh);
  }

  private async refreshHeatmap(epoch: number): Promise<void> {
    if (!this.selectionId || !this.heatmapParam) return;
    if (this.selectionCount === 0) return; // nothing to aggregate
    const grid = await this.api.heatmap({
      param: this.heatmapParam,
      selection: this.selectionId,
      fill: this.fillGaps ? 1 : 0,
    });
    if (epoch !== this.epoch) return;
    this.heatmap.render(grid);
  }

  async setHeatmapParam(name: string): Promise<void> {
    this.heatmapParam = name;
    await this.refreshHeatmap(this.epoch);
  }

  async setFillGaps(fill: boolean): Promise<void> {
    this.fillGaps = fill;
    await this.refreshHeatmap(this.epoch);
  }

  async setM(m: number): Promise<void> {
    this.m = m;
    const sv = await this.api.sensitivityView({
      m,
      count: this.subsampleCount,
    });
    this.sensitivity.render(sv);
  }

  async setAxisOrder(order: string[]): Promise<void> {
    await this.api.postAxisOrder(order);
    await this.refreshStaticViews();
  }

  async onZoom(_window: Interval | null): Promise<void> {
    // re-request at a higher sample density; the window only rescales x
    const count = _window
      ? Math.min(this.subsampleCount * 2, this.meta?.voxelCount ?? 1)
      : this.subsampleCount;
    const sv = await this.api.sensitivityView({ m: this.m, count });
    this.sensitivity.render(sv);
  }

  setMeshOpacity(opacity: number): void {
    this.mesh.setOpacity(opacity);
  }
}
