import init, { spectrum, heat_profile, growth_profile } from "./pkg/lpgraph_wasm.js";

const $ = (id) => document.getElementById(id);

function input() {
  return { spec: $("spec").value.trim(), radius: Number($("radius").value) || 0 };
}

function show(id, text, isError) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "err" : "";
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
}

function drawSpectrum(data) {
  const c = $("spectrum");
  const ctx = c.getContext("2d");
  const pad = 20;
  axes(ctx, c.width, c.height, pad);
  const top = Math.max(2, ...data.eigenvalues);
  const x = (v) => pad + (v / top) * (c.width - 2 * pad);
  ctx.fillStyle = "#000";
  ctx.fillText("0", pad - 3, c.height - 5);
  ctx.fillText(top.toFixed(2), c.width - pad - 20, c.height - 5);
  ctx.strokeStyle = "#1f5fbf";
  for (const v of data.eigenvalues) {
    ctx.beginPath();
    ctx.moveTo(x(v), pad);
    ctx.lineTo(x(v), c.height - pad);
    ctx.stroke();
  }
}

function runSpectrum() {
  const { spec, radius } = input();
  try {
    const data = JSON.parse(spectrum(spec, radius));
    drawSpectrum(data);
    show("spectrum-out",
      `${data.label}: ${data.vertices} vertices, bottom ${data.bottom.toFixed(6)}, ` +
      `in [0,2]: ${data.in_disk}, symmetric about 1: ${data.bipartite_symmetric}`);
  } catch (e) {
    show("spectrum-out", String(e), true);
  }
}

function runHeat() {
  const { spec, radius } = input();
  const t = Math.pow(10, Number($("t").value));
  $("t-val").textContent = t.toPrecision(3);
  let pts;
  try {
    pts = JSON.parse(heat_profile(spec, radius, t));
  } catch (e) {
    show("heat-out", String(e), true);
    return;
  }
  const c = $("heat");
  const ctx = c.getContext("2d");
  const pad = 30;
  axes(ctx, c.width, c.height, pad);
  const logs = pts.flatMap((p) => [p.p, p.bound]).filter((v) => v > 0).map(Math.log10);
  const lo = Math.max(Math.min(...logs), -30);
  const hi = Math.max(...logs);
  const dmax = Math.max(...pts.map((p) => p.d), 1e-9);
  const X = (d) => pad + (d / dmax) * (c.width - 2 * pad);
  const Y = (v) => c.height - pad - ((Math.max(Math.log10(v), lo) - lo) / (hi - lo || 1)) * (c.height - 2 * pad);
  let violations = 0;
  for (const p of pts) {
    ctx.fillStyle = "#c33";
    ctx.fillRect(X(p.d) - 2, Y(p.bound) - 2, 4, 4);
    ctx.fillStyle = "#1f5fbf";
    ctx.beginPath();
    ctx.arc(X(p.d), Y(p.p), 2.5, 0, 2 * Math.PI);
    ctx.fill();
    if (p.p > p.bound) violations++;
  }
  ctx.fillStyle = "#000";
  ctx.fillText(`log10 range [${lo.toFixed(1)}, ${hi.toFixed(1)}]`, pad + 5, pad - 8);
  ctx.fillText(`d up to ${dmax.toFixed(2)}`, c.width - 100, c.height - 10);
  show("heat-out", `${pts.length} vertices; blue p_t(root, y), red bound; violations: ${violations}`);
}

function runGrowth() {
  const { spec, radius } = input();
  let p;
  try {
    p = JSON.parse(growth_profile(spec, radius, $("metric").value));
  } catch (e) {
    show("growth-out", String(e), true);
    return;
  }
  const c = $("growth");
  const ctx = c.getContext("2d");
  const pad = 30;
  axes(ctx, c.width, c.height, pad);
  const rmax = Math.max(...p.radii, 1);
  const vmax = Math.log(Math.max(...p.volumes));
  const X = (r) => pad + (r / rmax) * (c.width - 2 * pad);
  const Y = (v) => c.height - pad - (Math.log(v) / (vmax || 1)) * (c.height - 2 * pad);
  ctx.strokeStyle = "#1f5fbf";
  ctx.beginPath();
  p.radii.forEach((r, i) => (i ? ctx.lineTo(X(r), Y(p.volumes[i])) : ctx.moveTo(X(r), Y(p.volumes[i]))));
  ctx.stroke();
  ctx.fillStyle = "#000";
  ctx.fillText("log m(B_r)", pad + 5, pad - 8);
  show("growth-out",
    `volumes ${p.volumes.join(", ")}\nrate ${p.rate.toFixed(4)}, polynomial exponent ${p.poly_exponent.toFixed(3)}`);
}

await init();
$("run-spectrum").onclick = runSpectrum;
$("run-growth").onclick = runGrowth;
$("t").oninput = runHeat;
$("spec").onchange = () => { runSpectrum(); runHeat(); runGrowth(); };
$("radius").onchange = $("spec").onchange;
runSpectrum();
runHeat();
runGrowth();
