// Live monitor: four chamber gauges plus the 6x6 pressure heat map, fed by
// stream snapshots. The heat map scale is fixed once per session from the
// service's reference payload, never rescaled to the data.

import type { Reference, Snapshot } from "./types.js";

function el(tag: string, cls: string, parent: Element): HTMLElement {
  const node = parent.ownerDocument!.createElement(tag);
  node.className = cls;
  parent.appendChild(node);
  return node;
}

export class LiveMonitor {
  private bars: HTMLElement[] = [];
  private readouts: HTMLElement[] = [];
  private cells: HTMLElement[] = [];
  private status: HTMLElement;
  private clock: HTMLElement;
  private counters: HTMLElement;
  renders = 0;
  lastT = -Infinity;

  constructor(
    root: Element,
    private pressureScale: number,
    private mapScale: number,
  ) {
    const gauges = el("div", "gauges", root);
    for (let i = 0; i < 4; i += 1) {
      const gauge = el("div", "gauge", gauges);
      const track = el("div", "gauge-track", gauge);
      this.bars.push(el("div", "gauge-fill", track));
      this.readouts.push(el("div", "gauge-readout", gauge));
      el("div", "gauge-label", gauge).textContent = `ch ${i + 1}`;
    }
    const grid = el("div", "heatmap", root);
    for (let i = 0; i < 36; i += 1) this.cells.push(el("div", "heatmap-cell", grid));
    const footer = el("div", "monitor-footer", root);
    this.clock = el("span", "monitor-clock", footer);
    this.counters = el("span", "monitor-counters", footer);
    this.status = el("span", "monitor-status", footer);
    this.setStatus("connecting");
  }

  static fromReference(root: Element, ref: Reference): LiveMonitor {
    return new LiveMonitor(root, ref.pressure_full_scale_kpa, ref.map_full_scale);
  }

  setStatus(text: string): void {
    this.status.textContent = text;
    this.status.dataset.status = text;
  }

  update(snap: Snapshot): void {
    if (snap.t < this.lastT) return; // stale snapshot after a reconnect
    this.lastT = snap.t;
    snap.pressures_kpa.forEach((p, i) => {
      const frac = Math.min(1, Math.max(0, p / this.pressureScale));
      this.bars[i].style.height = `${(frac * 100).toFixed(1)}%`;
      this.bars[i].dataset.open = String(snap.valves[i]);
      this.readouts[i].textContent = `${p.toFixed(1)} kPa`;
    });
    snap.map.forEach((row, r) =>
      row.forEach((v, c) => {
        const frac = Math.min(1, Math.max(0, v / this.mapScale));
        const cell = this.cells[r * 6 + c];
        cell.style.opacity = (0.08 + 0.92 * frac).toFixed(3);
        cell.dataset.value = v.toFixed(3);
      }),
    );
    this.clock.textContent = `t=${snap.t.toFixed(2)} s ${snap.state}`;
    const k = snap.counters;
    this.counters.textContent = `frames ${k.accepted} stale ${k.stale} dup ${k.duplicates}`;
    this.renders += 1;
  }
}
