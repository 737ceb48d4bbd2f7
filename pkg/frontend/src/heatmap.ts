import type { HeatmapPayload } from "./types.js";

const EMPTY_COLOR = "#4a5568"; // reserved neutral, outside the magma ramp

/**
 * Dense cell rendering of the parameter dependency grid using the
 * server-provided color table; empty cells use a reserved neutral color.
 */
export class HeatmapView {
  readonly root: HTMLElement;
  readonly canvas: HTMLCanvasElement;
  private tooltip: HTMLElement;
  lastGrid: HeatmapPayload | null = null;

  constructor(container: HTMLElement) {
    this.root = container;
    this.canvas = document.createElement("canvas");
    this.canvas.width = 600;
    this.canvas.height = 400;
    this.canvas.className = "heatmap-canvas";
    container.appendChild(this.canvas);
    this.tooltip = document.createElement("div");
    this.tooltip.className = "heatmap-tooltip";
    this.tooltip.style.display = "none";
    container.appendChild(this.tooltip);
    this.canvas.addEventListener("pointermove", (ev) => this.hover(ev as PointerEvent));
    this.canvas.addEventListener("pointerleave", () => {
      this.tooltip.style.display = "none";
    });
  }

  get gapCount(): number {
    return Number(this.canvas.dataset.gapCount ?? "0");
  }

  render(grid: HeatmapPayload): void {
    this.lastGrid = grid;
    const [pBins, cBins] = grid.bins;
    let gaps = 0;
    let lo = Infinity;
    let hi = -Infinity;
    for (const row of grid.values) {
      for (const v of row) {
        if (v === null) {
          gaps += 1;
        } else {
          lo = Math.min(lo, v);
          hi = Math.max(hi, v);
        }
      }
    }
    this.canvas.dataset.gapCount = String(gaps);
    const span = hi - lo || 1;
    const ctx = this.canvas.getContext && this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    const cw = this.canvas.width / pBins; // horizontal: parameter values
    const ch = this.canvas.height / cBins; // vertical: curve chunks
    const ramp = grid.colorMap.rgb;
    for (let p = 0; p < pBins; p++) {
      for (let c = 0; c < cBins; c++) {
        const v = grid.values[p][c];
        if (v === null) {
          ctx.fillStyle = EMPTY_COLOR;
        } else {
          const t = Math.min(Math.max((v - lo) / span, 0), 1);
          const [r, g, b] = ramp[Math.round(t * (ramp.length - 1))];
          ctx.fillStyle = `rgb(${r},${g},${b})`;
        }
        ctx.fillRect(p * cw, c * ch, Math.ceil(cw), Math.ceil(ch));
      }
    }
  }

  private hover(ev: PointerEvent): void {
    const grid = this.lastGrid;
    if (!grid) return;
    const rect = this.canvas.getBoundingClientRect();
    const w = rect.width || this.canvas.width;
    const h = rect.height || this.canvas.height;
    const [pBins, cBins] = grid.bins;
    const p = Math.min(
      Math.floor(((ev.clientX - rect.left) / w) * pBins),
      pBins - 1,
    );
    const c = Math.min(
      Math.floor(((ev.clientY - rect.top) / h) * cBins),
      cBins - 1,
    );
    if (p < 0 || c < 0) return;
    const v = grid.values[p][c];
    const [lo, hi] = grid.paramRange;
    const binW = (hi - lo) / pBins;
    this.tooltip.style.display = "block";
    this.tooltip.textContent =
      v === null
        ? `no data (${grid.param} in [${(lo + p * binW).toFixed(3)}, ` +
          `${(lo + (p + 1) * binW).toFixed(3)}])`
        : `mean ${v.toFixed(4)} | ${grid.param} in [${(lo + p * binW).toFixed(3)}, ` +
          `${(lo + (p + 1) * binW).toFixed(3)}] | curve chunk ${c}`;
  }
}
