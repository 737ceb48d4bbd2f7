import * as THREE from "three";

import type { MeshRenderer } from "./mesh_view.js";

/** three.js surface renderer with drag-orbit and wheel-zoom controls. */
export class ThreeMeshRenderer implements MeshRenderer {
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private material: THREE.MeshLambertMaterial;
  private mesh: THREE.Mesh | null = null;
  private center = new THREE.Vector3();
  private radius = 10;
  private theta = 0.8;
  private phi = 1.0;
  private dragging = false;
  private lastX = 0;
  private lastY = 0;

  constructor(container: HTMLElement) {
    const w = container.clientWidth || 480;
    const h = container.clientHeight || 360;
    this.camera = new THREE.PerspectiveCamera(45, w / h, 0.1, 10_000);
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(w, h);
    container.appendChild(this.renderer.domElement);
    this.scene.background = new THREE.Color(0x101418);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.45));
    const key = new THREE.DirectionalLight(0xffffff, 0.9);
    key.position.set(1, 2, 1.5);
    this.scene.add(key);
    this.material = new THREE.MeshLambertMaterial({
      color: 0x4fa3d1,
      transparent: true,
      opacity: 0.85,
      side: THREE.DoubleSide,
    });

    const el = this.renderer.domElement;
    el.addEventListener("pointerdown", (ev) => {
      this.dragging = true;
      this.lastX = ev.clientX;
      this.lastY = ev.clientY;
    });
    window.addEventListener("pointerup", () => (this.dragging = false));
    window.addEventListener("pointermove", (ev) => {
      if (!this.dragging) return;
      this.theta -= (ev.clientX - this.lastX) * 0.01;
      this.phi = Math.min(
        Math.max(this.phi - (ev.clientY - this.lastY) * 0.01, 0.05),
        Math.PI - 0.05,
      );
      this.lastX = ev.clientX;
      this.lastY = ev.clientY;
      this.update();
    });
    el.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.radius *= ev.deltaY > 0 ? 1.1 : 0.9;
      this.update();
    });
    this.update();
  }

  setMesh(vertices: Float32Array, triangles: Uint32Array): void {
    if (this.mesh) {
      this.scene.remove(this.mesh);
      this.mesh.geometry.dispose();
      this.mesh = null;
    }
    if (triangles.length === 0) {
      this.update();
      return;
    }
    const geo = new THREE.BufferGeometry();
    geo.setAttribute("position", new THREE.BufferAttribute(vertices, 3));
    geo.setIndex(new THREE.BufferAttribute(triangles, 1));
    geo.computeVertexNormals();
    geo.computeBoundingSphere();
    const sphere = geo.boundingSphere;
    if (sphere) {
      this.center.copy(sphere.center);
      this.radius = Math.max(sphere.radius * 2.6, 1);
    }
    this.mesh = new THREE.Mesh(geo, this.material);
    this.scene.add(this.mesh);
    this.update();
  }

  setOpacity(opacity: number): void {
    this.material.opacity = opacity;
    this.update();
  }

  private update(): void {
    const x =
      this.center.x + this.radius * Math.sin(this.phi) * Math.cos(this.theta);
    const y = this.center.y + this.radius * Math.cos(this.phi);
    const z =
      this.center.z + this.radius * Math.sin(this.phi) * Math.sin(this.theta);
    this.camera.position.set(x, y, z);
    this.camera.lookAt(this.center);
    this.renderer.render(this.scene, this.camera);
  }

  dispose(): void {
    this.renderer.dispose();
  }
}
