import init, { gaussianCurve, shapleyTable, simulate } from "./pkg/shiftshap_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

function call(fn, request, errorId) {
  $(errorId).textContent = "";
  try {
    return JSON.parse(fn(JSON.stringify(request)));
  } catch (e) {
    $(errorId).textContent = String(e);
    return null;
  }
}

function frame(canvas, yMin, yMax) {
  const ctx = canvas.getContext("2d");
  const pad = { left: 60, right: 20, top: 15, bottom: 30 };
  const w = canvas.width - pad.left - pad.right;
  const h = canvas.height - pad.top - pad.bottom;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const y = (v) => pad.top + h * (1 - (v - yMin) / (yMax - yMin));
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.lineWidth = 1;
  for (let i = 0; i <= 4; i++) {
    const v = yMin + (i / 4) * (yMax - yMin);
    ctx.beginPath();
    ctx.moveTo(pad.left - 4, y(v));
    ctx.lineTo(pad.left, y(v));
    ctx.stroke();
    ctx.fillText(v.toFixed(3), 4, y(v) + 4);
  }
  if (yMin < 0 && yMax > 0) {
    ctx.strokeStyle = "#ccc";
    ctx.beginPath();
    ctx.moveTo(pad.left, y(0));
    ctx.lineTo(pad.left + w, y(0));
    ctx.stroke();
  }
  return { ctx, pad, w, h, y };
}

function range(values) {
  let lo = Math.min(0, ...values);
  let hi = Math.max(0, ...values);
  if (hi - lo < 1e-9) hi = lo + 1;
  const margin = 0.08 * (hi - lo);
  return [lo - margin, hi + margin];
}

function lineChart(canvas, xs, series) {
  const [yMin, yMax] = range(series.flatMap((s) => s.values));
  const { ctx, pad, w, h, y } = frame(canvas, yMin, yMax);
  const xMin = xs[0];
  const xMax = xs[xs.length - 1];
  const x = (v) => pad.left + (w * (v - xMin)) / (xMax - xMin);
  ctx.fillStyle = "#444";
  for (let i = 0; i <= 4; i++) {
    const v = xMin + (i / 4) * (xMax - xMin);
    ctx.fillText(v.toFixed(2), x(v) - 10, pad.top + h + 18);
  }
  series.forEach((s, k) => {
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.lineWidth = 2;
    ctx.setLineDash(s.dashed ? [6, 4] : []);
    ctx.beginPath();
    s.values.forEach((v, i) => (i ? ctx.lineTo(x(xs[i]), y(v)) : ctx.moveTo(x(xs[i]), y(v))));
    ctx.stroke();
  });
  ctx.setLineDash([]);
}

function barChart(canvas, labels, groups) {
  const [yMin, yMax] = range(groups.flatMap((g) => g.values));
  const { ctx, pad, w, h, y } = frame(canvas, yMin, yMax);
  const slot = w / labels.length;
  const bar = (0.7 * slot) / groups.length;
  labels.forEach((label, i) => {
    groups.forEach((g, k) => {
      const left = pad.left + i * slot + 0.15 * slot + k * bar;
      const v = g.values[i];
      ctx.fillStyle = COLORS[k % COLORS.length];
      ctx.fillRect(left, Math.min(y(0), y(v)), bar - 2, Math.abs(y(v) - y(0)));
    });
    ctx.fillStyle = "#444";
    ctx.fillText(label, pad.left + i * slot + 0.15 * slot, pad.top + h + 18);
  });
}

function legend(id, names) {
  $(id).innerHTML = names
    .map((n, k) => `<span><i class="swatch" style="background:${COLORS[k]}"></i>${n}</span>`)
    .join("");
}

function drawCurve() {
  $("c-mu2-out").textContent = $("c-mu2").value;
  $("c-phi-out").textContent = $("c-phi").value;
  const points = call(
    gaussianCurve,
    {
      mu1: Number($("c-mu1").value),
      mu2: Number($("c-mu2").value),
      phi: Number($("c-phi").value),
      theta2_min: 0.3,
      theta2_max: 1.7,
      steps: 141,
    },
    "c-error",
  );
  if (!points) return;
  legend("c-legend", ["Attr X", "Attr Y|X", "total change", "KL X (dashed)", "KL Y|X (dashed)"]);
  lineChart(
    $("c-canvas"),
    points.map((p) => p.theta2),
    [
      { values: points.map((p) => p.attr_x) },
      { values: points.map((p) => p.attr_y_given_x) },
      { values: points.map((p) => p.delta) },
      { values: points.map((p) => p.kl_x), dashed: true },
      { values: points.map((p) => p.kl_y_given_x), dashed: true },
    ],
  );
}

function runTable() {
  const players = $("t-players").value.split(",").map((s) => s.trim()).filter(Boolean);
  const values = $("t-values").value.split(/[\s,]+/).filter(Boolean).map(Number);
  const out = call(
    shapleyTable,
    { players, values, permutations: Number($("t-perms").value), seed: Number($("t-seed").value) },
    "t-error",
  );
  if (!out) return;
  barChart($("t-canvas"), out.players, [{ values: out.exact }, { values: out.sampled }]);
  const rows = out.players.map(
    (p, i) => `${p.padEnd(12)} exact ${out.exact[i].toFixed(6)}  sampled ${out.sampled[i].toFixed(6)} ± ${out.stderr[i].toFixed(6)}`,
  );
  $("t-out").textContent = `${rows.join("\n")}\ntotal ${out.total}\n(blue: exact, red: sampled)`;
}

function runSimulation() {
  $("s-out").textContent = "running…";
  setTimeout(() => {
    const out = call(
      simulate,
      {
        n: Number($("s-n").value),
        mu2: Number($("s-mu2").value),
        theta2: Number($("s-theta2").value),
        seed: Number($("s-seed").value),
        logistic: $("s-logistic").checked,
      },
      "s-error",
    );
    if (!out) {
      $("s-out").textContent = "";
      return;
    }
    barChart($("s-canvas"), out.mechanisms, [{ values: out.estimated }, { values: out.exact }]);
    const rows = out.mechanisms.map(
      (m, i) => `${m.padEnd(6)} estimated ${out.estimated[i].toFixed(5)}  exact ${out.exact[i].toFixed(5)}`,
    );
    $("s-out").textContent =
      `${rows.join("\n")}\ntotal change ${out.total_change.toFixed(5)} (exact ${out.exact_total_change.toFixed(5)})` +
      `\n(blue: estimated, red: exact)`;
  }, 10);
}

await init();
for (const id of ["c-mu1", "c-mu2", "c-phi"]) $(id).addEventListener("input", drawCurve);
$("t-run").addEventListener("click", runTable);
$("s-run").addEventListener("click", runSimulation);
drawCurve();
runTable();
