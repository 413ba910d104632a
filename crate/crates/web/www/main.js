import init, { tailCurves, x0Curve, tetrahedronTest } from "./pkg/multidep_web.js";

const COLORS = { exact: "#222", classical: "#c0392b", variance: "#2471a3", pearson: "#27ae60", x0: "#8e44ad", tail: "#d35400" };

function plot(canvas, xs, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap(s => s.ys.filter(Number.isFinite));
  const ymin = opts.ymin ?? Math.min(...all), ymax = opts.ymax ?? Math.max(...all);
  const xmin = Math.min(...xs), xmax = Math.max(...xs);
  const px = x => pad + (x - xmin) / (xmax - xmin) * (w - 2 * pad);
  const py = y => h - pad - (y - ymin) / (ymax - ymin || 1) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "12px sans-serif";
  for (let i = 0; i <= 4; i++) {
    const y = ymin + (ymax - ymin) * i / 4;
    ctx.fillText(y.toPrecision(3), 2, py(y) + 4);
    const x = xmin + (xmax - xmin) * i / 4;
    ctx.fillText(x.toPrecision(3), px(x) - 10, h - pad + 16);
  }
  for (const v of opts.vlines ?? []) {
    ctx.setLineDash([5, 4]);
    ctx.strokeStyle = "#888";
    ctx.beginPath(); ctx.moveTo(px(v), pad); ctx.lineTo(px(v), h - pad); ctx.stroke();
    ctx.setLineDash([]);
  }
  for (const v of opts.hlines ?? []) {
    ctx.setLineDash([5, 4]);
    ctx.strokeStyle = "#888";
    ctx.beginPath(); ctx.moveTo(pad, py(v)); ctx.lineTo(w - pad, py(v)); ctx.stroke();
    ctx.setLineDash([]);
  }
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    let started = false;
    xs.forEach((x, i) => {
      const y = s.ys[i];
      if (!Number.isFinite(y)) { started = false; return; }
      if (started) ctx.lineTo(px(x), py(y)); else { ctx.moveTo(px(x), py(y)); started = true; }
    });
    ctx.stroke();
  }
}

function legend(el, names) {
  el.innerHTML = names.map(n => `<span style="color:${COLORS[n]}">■ ${n}</span>`).join("");
}

function guard(errId, fn) {
  const el = document.getElementById(errId);
  try { el.textContent = ""; fn(); } catch (e) { el.textContent = String(e.message ?? e); }
}

function runTail() {
  guard("tail-err", () => {
    const alphas = new Float64Array(document.getElementById("alphas").value.split(/[ ,;]+/).filter(Boolean).map(Number));
    const xmax = Number(document.getElementById("xmax").value);
    const c = JSON.parse(tailCurves(alphas, xmax, 120));
    const names = ["exact", "classical", "variance", "pearson"];
    legend(document.getElementById("tail-legend"), names);
    plot(document.getElementById("tail-plot"), c.x, names.map(n => ({ ys: c[n], color: COLORS[n] })),
      { ymin: 0, ymax: 1, vlines: [c.threshold] });
  });
}

function runX0() {
  guard("x0-err", () => {
    const c = JSON.parse(x0Curve(Number(document.getElementById("x0-points").value)));
    legend(document.getElementById("x0-legend"), ["x0", "tail"]);
    plot(document.getElementById("x0-plot"), c.alpha,
      [{ ys: c.x0, color: COLORS.x0 }, { ys: c.tail, color: COLORS.tail }],
      { ymin: 0, ymax: 2, hlines: [0.215] });
  });
}

function runTetrahedron() {
  guard("tet-err", () => {
    const r = Number(document.getElementById("tet-r").value);
    const n = Number(document.getElementById("tet-n").value);
    const seed = BigInt(document.getElementById("tet-seed").value);
    const rep = JSON.parse(tetrahedronTest(r, n, seed));
    const row = (m, q) => `<tr><td style="text-align:left">${m.method}</td><td>${m.p.toPrecision(4)}</td><td>${q.p.toPrecision(4)}</td></tr>`;
    document.getElementById("tet-out").innerHTML =
      `<table><tr><th style="text-align:left">method</th><th>multivariance p</th><th>2-multivariance p</th></tr>` +
      rep.results.map((m, i) => row(m, rep.pairwise[i])).join("") +
      `<tr><td style="text-align:left">statistic</td><td>${rep.statistic.toPrecision(4)}</td><td>${rep.pairwise_statistic.toPrecision(4)}</td></tr></table>`;
  });
}

await init();
document.getElementById("tail-run").onclick = runTail;
document.getElementById("x0-run").onclick = runX0;
document.getElementById("tet-run").onclick = runTetrahedron;
document.getElementById("tet-r").oninput = e => { document.getElementById("tet-r-val").textContent = e.target.value; };
runTail();
runX0();
