import type { MeshPayload } from "./types.js";

/**
 * Minimal 3D renderer contract so the view logic stays testable without
 * WebGL; the browser build plugs in the three.js implementation from
 * three_renderer.ts.
 */
export interface MeshRenderer {
  setMesh(vertices: Float32Array, triangles: Uint32Array): void;
  setOpacity(opacity: number): void;
  dispose(): void;
}

export class MeshView {
  readonly root: HTMLElement;
  private renderer: MeshRenderer | null;
  private label: HTMLElement;
  lastMesh: MeshPayload | null = null;
  opacity = 0.85;

  constructor(
    container: HTMLElement,
    rendererFactory: (el: HTMLElement) => MeshRenderer | null,
  ) {
    this.root = container;
    this.label = document.createElement("div");
    this.label.className = "mesh-label";
    container.appendChild(this.label);
    this.renderer = rendererFactory(container);
  }

  render(mesh: MeshPayload): void {
    this.lastMesh = mesh;
    this.label.textContent =
      mesh.triangleCount === 0
        ? "empty selection"
        : `${mesh.triangleCount} triangles`;
    if (this.renderer) {
      this.renderer.setMesh(
        new Float32Array(mesh.vertices),
        new Uint32Array(mesh.triangles),
      );
      this.renderer.setOpacity(this.opacity);
    }
  }

  setOpacity(opacity: number): void {
    this.opacity = opacity;
    if (this.renderer) this.renderer.setOpacity(opacity);
  }
}
