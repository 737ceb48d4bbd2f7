import type { Interval, PcpPayload } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 640;
const HEIGHT = 260;
const MARGIN = { top: 28, bottom: 18, left: 36, right: 20 };

export interface PcpEvents {
  onBrush: (axis: string, interval: Interval | null) => void;
  onReorder: (order: string[]) => void;
}

/**
 * Parallel coordinates with interval brushing and axis drag-reorder.
 * Sensitivity axes sit inside a labeled box; aux axes render outside it.
 */
export class PcpView {
  readonly root: HTMLElement;
  private svg: SVGSVGElement;
  private payload: PcpPayload | null = null;
  private brushes = new Map<string, Interval>();
  private events: PcpEvents;
  private dragAxis: string | null = null;
  private brushing: { axis: string; startY: number } | null = null;

  constructor(container: HTMLElement, events: PcpEvents) {
    this.root = container;
    this.events = events;
    this.svg = document.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
    this.svg.setAttribute("class", "pcp-svg");
    container.appendChild(this.svg);
  }

  get axisNames(): string[] {
    return this.payload ? this.payload.axes.map((a) => a.name) : [];
  }

  render(payload: PcpPayload): void {
    this.payload = payload;
    while (this.svg.firstChild) this.svg.removeChild(this.svg.firstChild);

    const axes = payload.axes.map((a) => a.name);
    const auxAxes = payload.auxAxes.map((a) => a.name);
    const all = [...axes, ...auxAxes];
    const step = (WIDTH - MARGIN.left - MARGIN.right) / Math.max(all.length, 1);
    const xOf = (i: number) => MARGIN.left + step * (i + 0.5);
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    const { min, max } = payload.scale;
    const span = max - min || 1;
    const yOf = (v: number, lo: number, hi: number) => {
      const s = hi - lo || 1;
      return y0 - ((v - lo) / s) * (y0 - y1);
    };

    // labeled box around the sensitivity axes
    if (axes.length) {
      const box = document.createElementNS(SVG_NS, "rect");
      box.setAttribute("class", "pcp-box");
      box.setAttribute("x", String(MARGIN.left + 2));
      box.setAttribute("y", String(y1 - 16));
      box.setAttribute("width", String(step * axes.length - 4));
      box.setAttribute("height", String(y0 - y1 + 28));
      box.setAttribute("fill", "none");
      box.setAttribute("stroke", "#888");
      this.svg.appendChild(box);
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("class", "pcp-box-label");
      label.setAttribute("x", String(MARGIN.left + 6));
      label.setAttribute("y", String(y1 - 4));
      label.textContent = `sensitivity (${payload.measure})`;
      this.svg.appendChild(label);
    }

    // polylines
    const linesGroup = document.createElementNS(SVG_NS, "g");
    linesGroup.setAttribute("class", "pcp-lines");
    const mask = payload.selectedMask;
    payload.polylines.forEach((line, li) => {
      const pts: string[] = [];
      line.forEach((v, ci) => {
        const isAux = ci >= axes.length;
        const lo = isAux ? payload.auxAxes[ci - axes.length].min : min;
        const hi = isAux ? payload.auxAxes[ci - axes.length].max : min + span;
        pts.push(`${xOf(ci)},${yOf(v, lo, hi)}`);
      });
      const path = document.createElementNS(SVG_NS, "polyline");
      path.setAttribute("points", pts.join(" "));
      path.setAttribute("fill", "none");
      const dimmed = mask ? !mask[li] : false;
      path.setAttribute("class", dimmed ? "pcp-line dimmed" : "pcp-line");
      linesGroup.appendChild(path);
    });
    this.svg.appendChild(linesGroup);

    // axes
    all.forEach((name, i) => {
      const isAux = i >= axes.length;
      const g = document.createElementNS(SVG_NS, "g");
      g.setAttribute("class", isAux ? "pcp-axis aux" : "pcp-axis");
      g.setAttribute("data-axis", name);
      const x = xOf(i);
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(x));
      line.setAttribute("x2", String(x));
      line.setAttribute("y1", String(y1));
      line.setAttribute("y2", String(y0));
      line.setAttribute("stroke", "#333");
      g.appendChild(line);
      const text = document.createElementNS(SVG_NS, "text");
      text.setAttribute("x", String(x));
      text.setAttribute("y", String(HEIGHT - 4));
      text.setAttribute("text-anchor", "middle");
      text.textContent = name;
      g.appendChild(text);

      const brush = this.brushes.get(name);
      if (brush && !isAux) {
        const rect = document.createElementNS(SVG_NS, "rect");
        rect.setAttribute("class", "pcp-brush");
        const yTop = yOf(brush[1], min, max);
        const yBot = yOf(brush[0], min, max);
        rect.setAttribute("x", String(x - 7));
        rect.setAttribute("width", "14");
        rect.setAttribute("y", String(yTop));
        rect.setAttribute("height", String(Math.max(yBot - yTop, 1)));
        g.appendChild(rect);
      }

      // pixel interactions translate into value-space brushes
      const hit = document.createElementNS(SVG_NS, "rect");
      hit.setAttribute("x", String(x - 10));
      hit.setAttribute("y", String(y1));
      hit.setAttribute("width", "20");
      hit.setAttribute("height", String(y0 - y1));
      hit.setAttribute("fill", "transparent");
      hit.setAttribute("class", "pcp-hit");
      if (!isAux) {
        hit.addEventListener("pointerdown", (ev) => {
          this.brushing = { axis: name, startY: (ev as PointerEvent).clientY };
        });
        hit.addEventListener("pointerup", (ev) => {
          if (!this.brushing || this.brushing.axis !== name) return;
          const a = this.pixelToValue(this.brushing.startY);
          const b = this.pixelToValue((ev as PointerEvent).clientY);
          this.brushing = null;
          if (Math.abs(a - b) < 1e-9) {
            this.setBrush(name, null);
          } else {
            this.setBrush(name, [Math.min(a, b), Math.max(a, b)]);
          }
        });
        hit.addEventListener("dblclick", () => this.setBrush(name, null));
      }
      g.appendChild(hit);

      // drag axis label to reorder
      text.addEventListener("pointerdown", () => (this.dragAxis = name));
      text.addEventListener("pointerup", (ev) => {
        if (!this.dragAxis || this.dragAxis === name || isAux) {
          this.dragAxis = null;
          return;
        }
        const order = axes.slice();
        const from = order.indexOf(this.dragAxis);
        const to = order.indexOf(name);
        if (from >= 0 && to >= 0) {
          order.splice(from, 1);
          order.splice(to, 0, this.dragAxis);
          this.events.onReorder(order);
        }
        this.dragAxis = null;
        ev.stopPropagation();
      });
      this.svg.appendChild(g);
    });
  }

  /** Map a client-space y pixel onto the shared sensitivity scale. */
  pixelToValue(clientY: number): number {
    const rect = this.svg.getBoundingClientRect();
    const h = rect.height || HEIGHT;
    const rel = (clientY - rect.top) / h; // 0 at top
    const y = rel * HEIGHT;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    const frac = Math.min(Math.max((y0 - y) / (y0 - y1), 0), 1);
    if (!this.payload) return 0;
    const { min, max } = this.payload.scale;
    return min + frac * (max - min);
  }

  /** Set or clear one axis brush (also the programmatic/scripted entry). */
  setBrush(axis: string, interval: Interval | null): void {
    if (interval === null) {
      this.brushes.delete(axis);
    } else {
      this.brushes.set(axis, interval);
    }
    if (this.payload) this.render(this.payload);
    this.events.onBrush(axis, interval);
  }

  getBrushes(): Record<string, Interval> {
    return Object.fromEntries(this.brushes);
  }
}
