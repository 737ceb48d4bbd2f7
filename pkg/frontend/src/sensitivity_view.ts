import type { Interval, SensitivityViewPayload } from "./types.js";

const ROW_HEIGHT = 56;
const LINE_HEIGHT = 120;
const WIDTH = 640;

export interface SensitivityViewEvents {
  onSfcBrush: (intervals: Interval[]) => void;
  onZoom: (window: Interval | null) => void;
}

function bandColor(band: number, maxBands: number): string {
  if (band === 0) return "#bdbdbd"; // first band reads as non-sensitive
  const t = maxBands <= 1 ? 1 : band / maxBands;
  const g = Math.round(255 * (1 - t));
  return `rgb(255,${g},${g})`; // white-to-red
}

/**
 * Stacked horizon graphs for the first m fields plus one combined line
 * chart; brushed curve intervals draw as gray boxes across every row.
 * Zoom only rescales the shared curve axis.
 */
export class SensitivityView {
  readonly root: HTMLElement;
  private events: SensitivityViewEvents;
  private payload: SensitivityViewPayload | null = null;
  private intervals: Interval[] = [];
  private window: Interval | null = null; // visible curve range when zoomed
  private brushStart: number | null = null;

  constructor(container: HTMLElement, events: SensitivityViewEvents) {
    this.root = container;
    this.events = events;
    this.root.classList.add("sensitivity-view");
    this.root.addEventListener("pointerdown", (ev) => {
      this.brushStart = this.pixelToPosition((ev as PointerEvent).clientX);
    });
    this.root.addEventListener("pointerup", (ev) => {
      if (this.brushStart === null) return;
      const end = this.pixelToPosition((ev as PointerEvent).clientX);
      const a = Math.min(this.brushStart, end);
      const b = Math.max(this.brushStart, end);
      this.brushStart = null;
      if (b - a >= 1) this.addInterval([Math.round(a), Math.round(b)]);
    });
    this.root.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const we = ev as WheelEvent;
      if (we.deltaY < 0) {
        const center = this.pixelToPosition(we.clientX);
        this.zoomAround(center);
      } else {
        this.setWindow(null);
      }
    });
  }

  get horizonCount(): number {
    return this.root.querySelectorAll(".horizon-row").length;
  }

  pixelToPosition(clientX: number): number {
    const rect = this.root.getBoundingClientRect();
    const w = rect.width || WIDTH;
    const frac = Math.min(Math.max((clientX - rect.left) / w, 0), 1);
    const [lo, hi] = this.visibleRange();
    return lo + frac * (hi - lo);
  }

  private visibleRange(): Interval {
    const len = this.payload ? this.payload.curveLength : 1;
    return this.window ?? [0, len - 1];
  }

  private zoomAround(center: number): void {
    const [lo, hi] = this.visibleRange();
    const half = Math.max((hi - lo) / 4, 8);
    this.setWindow([
      Math.max(0, Math.round(center - half)),
      Math.min((this.payload?.curveLength ?? 1) - 1, Math.round(center + half)),
    ]);
  }

  setWindow(window: Interval | null): void {
    this.window = window;
    this.events.onZoom(window); // re-request at higher sample density
  }

  /** Add one brushed curve interval (curve coordinates, zoom-independent). */
  addInterval(interval: Interval): void {
    this.intervals.push(interval);
    if (this.payload) this.render(this.payload);
    this.events.onSfcBrush(this.intervals.slice());
  }

  clearIntervals(): void {
    this.intervals = [];
    if (this.payload) this.render(this.payload);
    this.events.onSfcBrush([]);
  }

  getIntervals(): Interval[] {
    return this.intervals.slice();
  }

  render(payload: SensitivityViewPayload): void {
    this.payload = payload;
    this.root.textContent = "";
    const [winLo, winHi] = this.visibleRange();
    const maxBands = Math.max(
      1,
      ...payload.horizon.flatMap((h) =>
        h.fullBands.map((fb, i) => fb + (h.topFill[i] > 0 ? 1 : 0)),
      ),
    );

    for (const series of payload.horizon) {
      const row = document.createElement("div");
      row.className = "horizon-row";
      row.dataset.field = series.name;
      const label = document.createElement("span");
      label.className = "row-label";
      label.textContent = series.name;
      row.appendChild(label);
      const canvas = document.createElement("canvas");
      canvas.width = WIDTH;
      canvas.height = ROW_HEIGHT;
      row.appendChild(canvas);
      this.paintHorizon(canvas, payload, series.fullBands, series.topFill, maxBands,
        winLo, winHi);
      this.paintOverlays(row, winLo, winHi);
      this.root.appendChild(row);
    }

    if (payload.lineFields.length) {
      const row = document.createElement("div");
      row.className = "line-chart-row";
      const canvas = document.createElement("canvas");
      canvas.width = WIDTH;
      canvas.height = LINE_HEIGHT;
      row.appendChild(canvas);
      this.paintLines(canvas, payload, winLo, winHi);
      this.paintOverlays(row, winLo, winHi);
      this.root.appendChild(row);
    }
  }

  private xOf(pos: number, winLo: number, winHi: number): number {
    const span = Math.max(winHi - winLo, 1);
    return ((pos - winLo) / span) * WIDTH;
  }

  private paintHorizon(
    canvas: HTMLCanvasElement,
    payload: SensitivityViewPayload,
    fullBands: number[],
    topFill: number[],
    maxBands: number,
    winLo: number,
    winHi: number,
  ): void {
    const ctx = canvas.getContext && canvas.getContext("2d");
    if (!ctx) return; // headless test environment
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const pos = payload.positions;
    for (let i = 0; i < pos.length; i++) {
      if (pos[i] < winLo || pos[i] > winHi) continue;
      const x0 = this.xOf(pos[i], winLo, winHi);
      const x1 = i + 1 < pos.length ? this.xOf(pos[i + 1], winLo, winHi) : WIDTH;
      const w = Math.max(x1 - x0, 1);
      const bands = fullBands[i] + (topFill[i] > 0 ? 1 : 0);
      if (bands === 0) {
        ctx.fillStyle = bandColor(0, maxBands);
        ctx.fillRect(x0, 0, w, canvas.height);
        continue;
      }
      // superimposed bands: deepest band in front, top band partial
      for (let b = 0; b < bands; b++) {
        const fill = b === bands - 1 ? topFill[i] || 1 : 1;
        ctx.fillStyle = bandColor(b, maxBands);
        const h = canvas.height * fill;
        ctx.fillRect(x0, canvas.height - h, w, h);
      }
    }
  }

  private paintLines(
    canvas: HTMLCanvasElement,
    payload: SensitivityViewPayload,
    winLo: number,
    winHi: number,
  ): void {
    const ctx = canvas.getContext && canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const peak = Math.max(
      1e-12,
      ...payload.lineValues.flatMap((vs) => vs.map((v) => v)),
    );
    // draw back-to-front per the server's order
    for (const name of payload.drawOrder) {
      const fi = payload.lineFields.indexOf(name);
      if (fi < 0) continue;
      const values = payload.lineValues[fi];
      ctx.beginPath();
      ctx.moveTo(0, canvas.height);
      for (let i = 0; i < values.length; i++) {
        const x = this.xOf(payload.positions[i], winLo, winHi);
        const y = canvas.height * (1 - values[i] / peak);
        ctx.lineTo(x, y);
      }
      ctx.lineTo(WIDTH, canvas.height);
      ctx.closePath();
      const hue = (payload.lineFields.indexOf(name) * 67) % 360;
      ctx.fillStyle = `hsla(${hue},60%,55%,0.55)`;
      ctx.fill();
    }
  }

  private paintOverlays(row: HTMLElement, winLo: number, winHi: number): void {
    for (const [a, b] of this.intervals) {
      if (b < winLo || a > winHi) continue;
      const box = document.createElement("div");
      box.className = "sfc-brush-box";
      const x0 = this.xOf(Math.max(a, winLo), winLo, winHi);
      const x1 = this.xOf(Math.min(b, winHi), winLo, winHi);
      box.style.left = `${(x0 / WIDTH) * 100}%`;
      box.style.width = `${Math.max(((x1 - x0) / WIDTH) * 100, 0.3)}%`;
      row.appendChild(box);
    }
  }
}
