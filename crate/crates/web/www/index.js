import init, { Trainer, exact_field, circle_curvature } from "./pkg/pinn_curvature_web.js";

const NX = 128;
const NT = 50;
const EPOCHS_PER_FRAME = 5;

// Diverging blue-white-red map on [-1, 1].
function colour(v) {
  const c = Math.max(-1, Math.min(1, v));
  const a = Math.round(255 * (1 - Math.abs(c)));
  return c >= 0 ? [255, a, a] : [a, a, 255];
}

function drawField(canvas, values, nx, nt) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(nx, nt);
  for (let j = 0; j < nt; j++) {
    for (let i = 0; i < nx; i++) {
      // t grows upwards
      const [r, g, b] = colour(values[j * nx + i]);
      const p = 4 * ((nt - 1 - j) * nx + i);
      img.data.set([r, g, b, 255], p);
    }
  }
  const off = new OffscreenCanvas(nx, nt);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

function drawHistory(canvas, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const logs = series.flatMap((s) => Array.from(s.values).filter((v) => v > 0).map(Math.log10));
  if (logs.length === 0) return;
  const lo = Math.floor(Math.min(...logs));
  const hi = Math.ceil(Math.max(...logs)) || lo + 1;
  const n = Math.max(...series.map((s) => s.values.length));
  ctx.strokeStyle = "#eee";
  ctx.fillStyle = "#888";
  ctx.font = "10px sans-serif";
  for (let d = lo; d <= hi; d++) {
    const y = h - ((d - lo) / (hi - lo || 1)) * (h - 10) - 5;
    ctx.beginPath(); ctx.moveTo(30, y); ctx.lineTo(w, y); ctx.stroke();
    ctx.fillText(`1e${d}`, 0, y + 3);
  }
  for (const s of series) {
    ctx.strokeStyle = s.colour;
    ctx.beginPath();
    let pen = false;
    s.values.forEach((v, k) => {
      if (!(v > 0)) { pen = false; return; }
      const x = 30 + (k / Math.max(1, n - 1)) * (w - 30);
      const y = h - ((Math.log10(v) - lo) / (hi - lo || 1)) * (h - 10) - 5;
      if (pen) ctx.lineTo(x, y); else ctx.moveTo(x, y);
      pen = true;
    });
    ctx.stroke();
  }
}

let trainer = null;
let paused = false;

function render(beta) {
  drawField(document.getElementById("prediction"), trainer.field(NX, NT), NX, NT);
  drawField(document.getElementById("exact"), exact_field(beta, NX, NT), NX, NT);
  drawHistory(document.getElementById("history"), [
    { values: trainer.mse_history(), colour: "#1f77b4" },
    { values: trainer.kappa_history(), colour: "#d62728" },
  ]);
  const mse = trainer.mse_history();
  document.getElementById("train-status").textContent =
    `epoch ${trainer.epoch()}, ${trainer.status()}, grid MSE ${mse[mse.length - 1].toExponential(3)}`;
}

function loop(beta) {
  if (!trainer || paused) return;
  try {
    const more = trainer.step(EPOCHS_PER_FRAME);
    render(beta);
    if (more) requestAnimationFrame(() => loop(beta));
    else document.getElementById("pause").disabled = true;
  } catch (e) {
    document.getElementById("train-status").textContent = `error: ${e.message ?? e}`;
  }
}

function startTraining(event) {
  event.preventDefault();
  const f = new FormData(event.target);
  const beta = Number(f.get("beta"));
  try {
    trainer?.free();
    trainer = new Trainer(f.get("optimizer"), beta, Number(f.get("lr")), Number(f.get("seed")), Number(f.get("epochs")));
  } catch (e) {
    document.getElementById("train-status").textContent = `error: ${e.message ?? e}`;
    return;
  }
  paused = false;
  const pause = document.getElementById("pause");
  pause.disabled = false;
  pause.textContent = "Pause";
  pause.onclick = () => {
    paused = !paused;
    pause.textContent = paused ? "Resume" : "Pause";
    if (!paused) loop(beta);
  };
  render(beta);
  requestAnimationFrame(() => loop(beta));
}

function showExact() {
  const beta = Number(document.getElementById("exact-beta").value);
  document.getElementById("exact-beta-value").textContent = beta;
  drawField(document.getElementById("exact-only"), exact_field(beta, NX, NT), NX, NT);
}

function measureCircle(event) {
  event.preventDefault();
  const f = new FormData(event.target);
  const r = Number(f.get("radius"));
  try {
    const k = circle_curvature(r, Number(f.get("angle")), Number(f.get("dim")));
    document.getElementById("circle-result").textContent =
      `measured κω = ${k.toPrecision(10)}, 1/r = ${(1 / r).toPrecision(10)}`;
  } catch (e) {
    document.getElementById("circle-result").textContent = `error: ${e.message ?? e}`;
  }
}

await init();
document.getElementById("train-form").addEventListener("submit", startTraining);
document.getElementById("exact-beta").addEventListener("input", showExact);
document.getElementById("circle-form").addEventListener("submit", measureCircle);
showExact();
