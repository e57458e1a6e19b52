// Results view: confusion matrix rendered as a table heat map plus the
// accuracy and response-time summary lines from the service's report.

import type { Report, Results } from "./types.js";

function el(tag: string, cls: string, parent: Element): HTMLElement {
  const node = parent.ownerDocument!.createElement(tag);
  node.className = cls;
  parent.appendChild(node);
  return node;
}

export function renderConfusion(root: Element, report: Report): void {
  const k = report.counts.length;
  const table = el("table", "confusion", root);
  const head = el("tr", "", el("thead", "", table));
  el("th", "", head).textContent = "stim \\ resp";
  for (let j = 1; j <= k; j += 1) el("th", "", head).textContent = String(j);
  const body = el("tbody", "", table);
  const peak = Math.max(1, ...report.counts.map((row) => Math.max(...row)));
  report.counts.forEach((row, i) => {
    const tr = el("tr", "", body);
    el("th", "", tr).textContent = String(i + 1);
    row.forEach((v, j) => {
      const td = el("td", i === j ? "diag" : "", tr);
      td.textContent = String(v);
      td.style.opacity = (0.15 + 0.85 * (v / peak)).toFixed(3);
      td.dataset.count = String(v);
    });
  });
}

export function renderResults(root: Element, results: Results): void {
  root.textContent = "";
  const head = el("div", "results-head", root);
  head.textContent =
    `${results.task} / ${results.participant}: ` +
    `${results.completed} of ${results.total} trials`;
  if (results.report === null) {
    el("div", "results-error", root).textContent =
      `report unavailable: ${results.report_error}`;
    return;
  }
  const rep = results.report;
  renderConfusion(root, rep);
  const summary = el("dl", "results-summary", root);
  const line = (label: string, value: string) => {
    el("dt", "", summary).textContent = label;
    el("dd", "", summary).textContent = value;
  };
  line("accuracy", `${(rep.accuracy_mean * 100).toFixed(1)}% ` +
    `(chance ${(rep.chance * 100).toFixed(1)}%)`);
  line("per-class", rep.per_class_accuracy
    .map((a) => (a * 100).toFixed(0) + "%").join(" "));
  line("response time", `${rep.rt_mean_s.toFixed(3)} s ` +
    `sd ${rep.rt_sd_s.toFixed(3)} s over ${rep.trial_count} trials`);
}
