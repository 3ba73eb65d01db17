// Glue between the static page and the wasm module. Build the module with
// wasm-bindgen first (see the repository README), so that ./pkg/ exists.

import init, {
  simulate,
  scalability,
  governor_sweep,
  bundled_scenario,
  bundled_names,
} from "./pkg/mrac_wasm.js";

const PALETTE = ["#58a6ff", "#f0883e", "#3fb950", "#d2a8ff", "#f85149", "#39c5cf", "#d29922"];
const STRIDE = 20; // 30 000-step runs decimate to 1 500 plotted points

const el = (id) => document.getElementById(id);
const state = { tab: "simulate" };

function setStatus(text, isError = false) {
  const s = el("status");
  s.textContent = text;
  s.className = isError ? "err" : "";
}

// ---------------------------------------------------------------------------
// canvas line chart
// ---------------------------------------------------------------------------

function drawChart(canvas, { title, series, ylabel, logY = false }) {
  const dpr = window.devicePixelRatio || 1;
  const cssWidth = canvas.clientWidth || 800;
  const cssHeight = 320;
  canvas.width = cssWidth * dpr;
  canvas.height = cssHeight * dpr;
  canvas.style.height = cssHeight + "px";
  const ctx = canvas.getContext("2d");
  ctx.scale(dpr, dpr);
  ctx.clearRect(0, 0, cssWidth, cssHeight);

  const margin = { left: 58, right: 12, top: 28, bottom: 30 };
  const W = cssWidth - margin.left - margin.right;
  const H = cssHeight - margin.top - margin.bottom;

  const ys = (v) => (logY ? Math.log10(Math.max(v, 1e-18)) : v);
  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const s of series) {
    for (let i = 0; i < s.xs.length; i++) {
      const x = s.xs[i], y = ys(s.ys[i]);
      if (!Number.isFinite(x) || !Number.isFinite(y)) continue;
      if (x < xMin) xMin = x;
      if (x > xMax) xMax = x;
      if (y < yMin) yMin = y;
      if (y > yMax) yMax = y;
    }
  }
  if (!Number.isFinite(xMin)) { xMin = 0; xMax = 1; yMin = 0; yMax = 1; }
  if (yMax - yMin < 1e-12) { yMax += 1; yMin -= 1; }
  const pad = 0.06 * (yMax - yMin);
  yMin -= pad; yMax += pad;

  const px = (x) => margin.left + ((x - xMin) / (xMax - xMin)) * W;
  const py = (y) => margin.top + H - ((y - yMin) / (yMax - yMin)) * H;

  // grid and ticks
  ctx.strokeStyle = "#232b35";
  ctx.fillStyle = "#8b97a5";
  ctx.font = "11px system-ui";
  ctx.lineWidth = 1;
  const xTicks = 6, yTicks = 5;
  for (let i = 0; i <= xTicks; i++) {
    const x = xMin + (i / xTicks) * (xMax - xMin);
    ctx.beginPath();
    ctx.moveTo(px(x), margin.top);
    ctx.lineTo(px(x), margin.top + H);
    ctx.stroke();
    ctx.textAlign = "center";
    ctx.fillText(x.toPrecision(3), px(x), margin.top + H + 16);
  }
  for (let i = 0; i <= yTicks; i++) {
    const y = yMin + (i / yTicks) * (yMax - yMin);
    ctx.beginPath();
    ctx.moveTo(margin.left, py(y));
    ctx.lineTo(margin.left + W, py(y));
    ctx.stroke();
    ctx.textAlign = "right";
    const label = logY ? "1e" + y.toFixed(1) : y.toPrecision(3);
    ctx.fillText(label, margin.left - 6, py(y) + 4);
  }

  // series
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = s.width || 1.5;
    ctx.setLineDash(s.dash || []);
    ctx.beginPath();
    let started = false;
    for (let i = 0; i < s.xs.length; i++) {
      const x = px(s.xs[i]), y = py(ys(s.ys[i]));
      if (!Number.isFinite(x) || !Number.isFinite(y)) { started = false; continue; }
      if (started) ctx.lineTo(x, y); else { ctx.moveTo(x, y); started = true; }
    }
    ctx.stroke();
    ctx.setLineDash([]);
  }

  // title and legend
  ctx.fillStyle = "#dde3ea";
  ctx.font = "600 12px system-ui";
  ctx.textAlign = "left";
  ctx.fillText(title, margin.left, 16);
  ctx.font = "11px system-ui";
  let lx = margin.left + ctx.measureText(title).width + 24;
  for (const s of series) {
    if (!s.label) continue;
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 2;
    ctx.setLineDash(s.dash || []);
    ctx.beginPath();
    ctx.moveTo(lx, 12);
    ctx.lineTo(lx + 16, 12);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#8b97a5";
    ctx.fillText(s.label, lx + 20, 16);
    lx += 20 + ctx.measureText(s.label).width + 16;
  }
  if (ylabel) {
    ctx.save();
    ctx.translate(12, margin.top + H / 2);
    ctx.rotate(-Math.PI / 2);
    ctx.textAlign = "center";
    ctx.fillStyle = "#8b97a5";
    ctx.fillText(ylabel, 0, 0);
    ctx.restore();
  }
}

function chartInto(container, opts) {
  const canvas = document.createElement("canvas");
  container.appendChild(canvas);
  drawChart(canvas, opts);
}

function clearOutput() {
  el("output").replaceChildren();
}

// ---------------------------------------------------------------------------
// tabs and actions
// ---------------------------------------------------------------------------

function runSimulate() {
  const doc = JSON.parse(simulate(el("scenario").value, STRIDE));
  clearOutput();
  const out = el("output");
  const stateSeries = [];
  doc.x.forEach((ys, i) => stateSeries.push({
    label: `x${i + 1}`, color: PALETTE[i % PALETTE.length], xs: doc.times, ys,
  }));
  doc.x_r.forEach((ys, i) => stateSeries.push({
    label: `xr${i + 1}`, color: PALETTE[i % PALETTE.length], xs: doc.times, ys, dash: [5, 4],
  }));
  chartInto(out, { title: `plant vs reference state — ${doc.law} / ${doc.architecture}`, series: stateSeries });
  const inputSeries = [];
  doc.u.forEach((ys, i) => inputSeries.push({
    label: `u${i + 1}`, color: PALETTE[i % PALETTE.length], xs: doc.times, ys,
  }));
  doc.u_ad.forEach((ys, i) => inputSeries.push({
    label: `uad${i + 1}`, color: PALETTE[(i + 3) % PALETTE.length], xs: doc.times, ys, dash: [5, 4],
  }));
  doc.c.forEach((ys, i) => inputSeries.push({
    label: `c${i + 1}`, color: PALETTE[(i + 5) % PALETTE.length], xs: doc.times, ys, dash: [2, 3],
  }));
  chartInto(out, { title: "control input, adaptive input, command", series: inputSeries });
  chartInto(out, {
    title: "tracking error norm (log scale)",
    series: [{ label: "|e|", color: PALETTE[4], xs: doc.times, ys: doc.e_norm }],
    logY: true,
  });
  const warn = doc.warnings.length ? ` — warnings: ${doc.warnings.join("; ")}` : "";
  setStatus(`sup |e| = ${doc.sup_e.toExponential(3)}${warn}`);
}

function runScaling() {
  const doc = JSON.parse(scalability(
    el("scenario").value, el("alphas").value, Number(el("tolerance").value), STRIDE,
  ));
  clearOutput();
  const out = el("output");
  const series = [{
    label: "nominal x1", color: "#dde3ea", width: 2.5, xs: doc.times, ys: doc.x1_nominal,
  }];
  doc.entries.forEach((entry, i) => {
    if (entry.error) return;
    series.push({
      label: `α=${entry.alpha} (x1/α)`,
      color: PALETTE[i % PALETTE.length],
      xs: doc.times,
      ys: entry.x1_over_alpha,
      dash: [6, 4],
    });
  });
  chartInto(out, {
    title: "scaled responses divided by α, overlaid on the nominal run",
    series,
  });

  const table = document.createElement("table");
  table.innerHTML = `<tr><th>α</th><th>state dev</th><th>weight dev</th><th>input dev</th><th>verdict</th></tr>`;
  for (const entry of doc.entries) {
    const row = document.createElement("tr");
    const exp = (v) => (v == null ? "—" : v.toExponential(3));
    row.innerHTML = entry.error
      ? `<td>${entry.alpha}</td><td colspan="3">${entry.error}</td><td class="fail">FAIL</td>`
      : `<td>${entry.alpha}</td><td>${exp(entry.state_deviation)}</td>` +
        `<td>${exp(entry.weight_deviation)}</td><td>${exp(entry.input_deviation)}</td>` +
        `<td class="${entry.pass ? "pass" : "fail"}">${entry.pass ? "pass" : "FAIL"}</td>`;
    table.appendChild(row);
  }
  const panel = document.createElement("div");
  panel.className = "panel";
  panel.appendChild(table);
  out.appendChild(panel);
  setStatus(doc.pass
    ? `PASS — every deviation within ${doc.tolerance}`
    : `FAIL — deviations exceed ${doc.tolerance}`);
}

function runGovernor() {
  const doc = JSON.parse(governor_sweep(el("scenario").value, el("lambdas").value, STRIDE));
  clearOutput();
  const out = el("output");
  const series = doc.runs.map((run, i) => ({
    label: `λ=${run.lambda}`,
    color: PALETTE[i % PALETTE.length],
    xs: doc.times,
    ys: run.tracking_norm,
  }));
  chartInto(out, {
    title: "distance to the desired reference |x − x_rD| (log scale)",
    series,
    logY: true,
  });
  const summary = doc.runs
    .map((r) => `λ=${r.lambda}: sup ${r.sup_tracking.toExponential(3)}`)
    .join("   ");
  setStatus(summary);
}

const RUNNERS = { simulate: runSimulate, scaling: runScaling, governor: runGovernor };

function selectTab(tab) {
  state.tab = tab;
  document.querySelectorAll("nav button").forEach((b) =>
    b.classList.toggle("active", b.dataset.tab === tab));
  el("opts-scaling").hidden = tab !== "scaling";
  el("opts-governor").hidden = tab !== "governor";
  if (tab === "governor" && !el("scenario").value.includes('kind = "governor"')) {
    el("preset").value = "governor";
    el("scenario").value = bundled_scenario("governor");
  }
}

async function main() {
  await init();
  const presets = bundled_names().split(",");
  const select = el("preset");
  for (const name of presets) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    select.appendChild(option);
  }
  select.addEventListener("change", () => {
    el("scenario").value = bundled_scenario(select.value);
  });
  el("scenario").value = bundled_scenario("standard");
  document.querySelectorAll("nav button").forEach((b) =>
    b.addEventListener("click", () => selectTab(b.dataset.tab)));
  el("go").addEventListener("click", () => {
    const go = el("go");
    go.disabled = true;
    setStatus("running…");
    // let the status paint before the synchronous wasm call
    setTimeout(() => {
      try {
        RUNNERS[state.tab]();
      } catch (err) {
        setStatus(String(err), true);
        clearOutput();
      } finally {
        go.disabled = false;
      }
    }, 20);
  });
  setStatus("ready");
}

main().catch((err) => setStatus("failed to load wasm module: " + err, true));
