// Response reference sheet: one diagram per stimulus alternative, generated
// from the service's /reference payload (the same pattern set the engine
// presents from), so the sheet cannot drift from the stimuli.

import type { Reference, TaskName } from "./types.js";

export interface SheetEntry {
  id: number;
  label: string;
  svg: string;
}

const CELL = 18;
const GAP = 4;

function quadrantSvg(chambers: number[], layout: Record<string, [number, number]>): string {
  const side = 2 * CELL + 3 * GAP;
  const rects: string[] = [];
  for (const [chamber, [row, col]] of Object.entries(layout)) {
    const on = chambers.includes(Number(chamber));
    const x = GAP + col * (CELL + GAP);
    const y = GAP + row * (CELL + GAP);
    rects.push(
      `<rect x="${x}" y="${y}" width="${CELL}" height="${CELL}" rx="3" ` +
        `class="${on ? "q-on" : "q-off"}" data-chamber="${chamber}" data-on="${on}"/>`,
    );
  }
  return `<svg viewBox="0 0 ${side} ${side}" class="sheet-diagram">${rects.join("")}</svg>`;
}

function arrowSvg(token: string): string {
  const side = 2 * CELL + 3 * GAP;
  const c = side / 2;
  const r = side / 2 - 6;
  let body: string;
  switch (token) {
    case "Right":
      body = `<path d="M ${c - r} ${c} H ${c + r - 6} M ${c + r} ${c} l -8 -5 v 10 z"/>`;
      break;
    case "Left":
      body = `<path d="M ${c + r} ${c} H ${c - r + 6} M ${c - r} ${c} l 8 -5 v 10 z"/>`;
      break;
    case "Up":
      body = `<path d="M ${c} ${c + r} V ${c - r + 6} M ${c} ${c - r} l -5 8 h 10 z"/>`;
      break;
    case "Down":
      body = `<path d="M ${c} ${c - r} V ${c + r - 6} M ${c} ${c + r} l -5 -8 h 10 z"/>`;
      break;
    case "CW":
      body =
        `<path d="M ${c} ${c - r} A ${r} ${r} 0 1 1 ${c - r} ${c}" fill="none"/>` +
        `<path d="M ${c} ${c - r} l 8 -4 v 9 z"/>`;
      break;
    case "CCW":
      body =
        `<path d="M ${c} ${c - r} A ${r} ${r} 0 1 0 ${c + r} ${c}" fill="none"/>` +
        `<path d="M ${c} ${c - r} l -8 -4 v 9 z"/>`;
      break;
    default:
      throw new Error(`unknown sliding token ${token}`);
  }
  return `<svg viewBox="0 0 ${side} ${side}" class="sheet-diagram" data-token="${token}">${body}</svg>`;
}

function waveSvg(freqHz: number): string {
  const side = 2 * CELL + 3 * GAP;
  // draw one, three, or many lobes so relative rate is readable at a glance
  const lobes = freqHz <= 5 ? 1 : freqHz <= 30 ? 3 : 8;
  const w = side - 8;
  const seg = w / lobes;
  let d = `M 4 ${side / 2}`;
  for (let i = 0; i < lobes; i += 1) {
    const dir = i % 2 === 0 ? -1 : 1;
    d += ` q ${seg / 2} ${dir * (side / 2 - 6)} ${seg} 0`;
  }
  return `<svg viewBox="0 0 ${side} ${side}" class="sheet-diagram" data-freq="${freqHz}"><path d="${d}" fill="none"/></svg>`;
}

export function buildSheet(ref: Reference, task: TaskName): SheetEntry[] {
  if (task === "patterns") {
    return Object.keys(ref.patterns)
      .map(Number)
      .sort((a, b) => a - b)
      .map((id) => ({
        id,
        label: `P${id}`,
        svg: quadrantSvg(ref.patterns[String(id)], ref.layout),
      }));
  }
  if (task === "sliding") {
    return ref.sliding.map((token, i) => ({
      id: i + 1,
      label: token,
      svg: arrowSvg(token),
    }));
  }
  return ref.vibro.map((v, i) => ({
    id: i + 1,
    label: `${v.material} ${v.freq_hz} Hz`,
    svg: waveSvg(v.freq_hz),
  }));
}
