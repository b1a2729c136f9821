// Build with: wasm-pack build crates/wasm-demo --target web --out-dir www/pkg
import init, { psi_curve, path_points, tail_vs_asymptote } from "./pkg/expfun_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const err = (e) => { $("err").textContent = e ? String(e) : ""; };

function axes(ctx, w, h, pad, xr, yr, xlab, ylab) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(xr[0].toPrecision(3), pad, h - pad + 14);
  ctx.fillText(xr[1].toPrecision(3), w - pad - 30, h - pad + 14);
  ctx.fillText(yr[0].toPrecision(3), 2, h - pad);
  ctx.fillText(yr[1].toPrecision(3), 2, pad + 10);
  ctx.fillText(xlab, w / 2, h - 4);
  ctx.fillText(ylab, pad + 4, pad - 6);
}

function scaler(w, h, pad, xr, yr) {
  return (x, y) => [
    pad + ((x - xr[0]) / (xr[1] - xr[0])) * (w - 2 * pad),
    h - pad - ((y - yr[0]) / (yr[1] - yr[0])) * (h - 2 * pad),
  ];
}

function line(ctx, pts, map, color, dash = []) {
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  let pen = false;
  for (const [x, y] of pts) {
    if (!Number.isFinite(y)) { pen = false; continue; }
    const [px, py] = map(x, y);
    pen ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
    pen = true;
  }
  ctx.stroke();
  ctx.setLineDash([]);
}

function range(vals) {
  const f = vals.filter(Number.isFinite);
  let lo = Math.min(...f), hi = Math.max(...f);
  if (lo === hi) { lo -= 1; hi += 1; }
  const m = 0.05 * (hi - lo);
  return [lo - m, hi + m];
}

function drawPsi() {
  const c = $("psi"), ctx = c.getContext("2d");
  const v = psi_curve($("model").value, +$("psi-lo").value, +$("psi-hi").value, 400);
  const pts = [];
  for (let i = 0; i < v.length; i += 2) pts.push([v[i], v[i + 1]]);
  const xr = [pts[0][0], pts[pts.length - 1][0]];
  const yr = range(pts.map((p) => p[1]).filter((y) => Math.abs(y) < 50));
  axes(ctx, c.width, c.height, 40, xr, yr, "λ", "ψ(λ)");
  const map = scaler(c.width, c.height, 40, xr, yr);
  line(ctx, [[xr[0], 0], [xr[1], 0]], map, "#bbb", [4, 4]);
  line(ctx, pts.map(([x, y]) => [x, Math.abs(y) < 50 ? y : NaN]), map, "#1560bd");
}

function drawPath() {
  const c = $("path"), ctx = c.getContext("2d");
  const v = path_points($("model").value, +$("path-seed").value, +$("path-h").value, 2000);
  const xi = [], inf = [];
  for (let i = 0; i < v.length; i += 3) { xi.push([v[i], v[i + 1]]); inf.push([v[i], v[i + 2]]); }
  const xr = [0, xi[xi.length - 1][0]];
  const yr = range(xi.map((p) => p[1]));
  axes(ctx, c.width, c.height, 40, xr, yr, "t", "ξ_t");
  const map = scaler(c.width, c.height, 40, xr, yr);
  line(ctx, xi, map, "#1560bd");
  line(ctx, inf, map, "#d2691e", [5, 3]);
}

function drawTail() {
  const c = $("tail"), ctx = c.getContext("2d");
  const json = tail_vs_asymptote($("model").value, $("regime").value, 7, +$("tail-n").value, +$("tail-cap").value);
  const cmp = JSON.parse(json);
  const pts = cmp.points;
  const lx = pts.map((p) => Math.log10(p.t));
  const ly = pts.flatMap((p) => [p.ci_lo, p.ci_hi, p.asymptote]).filter((y) => y > 0).map(Math.log10);
  const xr = range(lx), yr = range(ly);
  axes(ctx, c.width, c.height, 40, xr, yr, "log10 t", "log10 P(I > t)");
  const map = scaler(c.width, c.height, 40, xr, yr);
  line(ctx, pts.map((p) => [Math.log10(p.t), Math.log10(p.asymptote)]), map, "#d2691e", [6, 3]);
  ctx.fillStyle = "#1560bd";
  ctx.strokeStyle = "#1560bd";
  for (const p of pts) {
    const [x, y] = map(Math.log10(p.t), Math.log10(p.p_hat));
    const [, ylo] = map(0, Math.log10(Math.max(p.ci_lo, 1e-300)));
    const [, yhi] = map(0, Math.log10(p.ci_hi));
    ctx.beginPath(); ctx.moveTo(x, ylo); ctx.lineTo(x, yhi); ctx.stroke();
    ctx.beginPath(); ctx.arc(x, y, 3, 0, 2 * Math.PI); ctx.fill();
  }
  const rows = pts.map((p) =>
    `<tr><td>${p.t.toPrecision(4)}</td><td>${p.n_exceed}</td><td>${p.p_hat.toExponential(3)}</td>` +
    `<td>${p.asymptote.toExponential(3)}</td><td>${p.ratio == null ? "" : p.ratio.toFixed(3)}</td></tr>`);
  $("tail-table").innerHTML =
    `<table><tr><th>t</th><th>exceed</th><th>p̂</th><th>asymptote</th><th>ratio</th></tr>${rows.join("")}</table>`;
}

const guard = (f) => () => { try { err(); f(); } catch (e) { err(e); } };

await init();
$("psi-go").onclick = guard(drawPsi);
$("path-go").onclick = guard(drawPath);
$("tail-go").onclick = guard(drawTail);
for (const b of document.querySelectorAll("button[data-preset]")) {
  b.onclick = guard(() => {
    $("model").value = b.dataset.preset;
    $("regime").value = b.dataset.regime;
    $("tail-cap").value = b.dataset.cap;
    drawPsi();
    drawPath();
  });
}
guard(() => { drawPsi(); drawPath(); })();
