// Wires the static page to the wasm module. Build the module first:
//   rustup target add wasm32-unknown-unknown
//   cargo build -p assetflow-wasm --release --target wasm32-unknown-unknown
//   wasm-bindgen --target web --out-dir crates/assetflow-wasm/www/pkg \
//     target/wasm32-unknown-unknown/release/assetflow_wasm.wasm
// then serve this directory (any static file server).

import init, {
  simulate_prices_svg,
  simulate_wealth_svg,
  simulate_summary_json,
  bifurcation_scan_svg,
  stability_json,
} from "./pkg/assetflow_wasm.js";

const $ = (id) => document.getElementById(id);

function busy(el, on) {
  el.style.opacity = on ? 0.4 : 1.0;
}

function runSimulation() {
  const q1 = parseFloat($("q1").value);
  const tEnd = parseFloat($("tend").value);
  const flow = $("flow").checked;
  busy($("prices"), true);
  // Let the browser paint the busy state before the synchronous call.
  setTimeout(() => {
    try {
      $("prices").innerHTML = simulate_prices_svg(q1, tEnd, flow);
      $("wealth").innerHTML = simulate_wealth_svg(q1, tEnd, flow);
      const s = JSON.parse(simulate_summary_json(q1, tEnd, flow));
      const fmt = (x, d = 3) => (x === null ? "n/a" : x.toFixed(d));
      $("summary").textContent =
        `amplitude   nigeria ${fmt(s.amplitude[0])} $/bbl   libya ${fmt(s.amplitude[1])} $/bbl\n` +
        `period      nigeria ${fmt(s.period[0], 1)} d       libya ${fmt(s.period[1], 1)} d\n` +
        `converged   ${s.converged[0] && s.converged[1]}\n` +
        `final P     ${s.final_prices.map((p) => p.toFixed(3)).join(", ")}\n` +
        `wealth      usa ${s.final_wealth[0].toFixed(4)}  china ${s.final_wealth[1].toFixed(4)}`;
    } catch (e) {
      $("summary").textContent = `error: ${e}`;
    } finally {
      busy($("prices"), false);
    }
  }, 20);
}

function runScan() {
  const lo = parseFloat($("lo").value);
  const hi = parseFloat($("hi").value);
  const pts = parseInt($("pts").value, 10);
  $("scan-note").textContent = "scanning…";
  busy($("diagram"), true);
  setTimeout(() => {
    try {
      const t0 = performance.now();
      $("diagram").innerHTML = bifurcation_scan_svg(lo, hi, pts, 1200.0);
      $("scan-note").textContent = `${pts} points in ${((performance.now() - t0) / 1000).toFixed(1)} s`;
    } catch (e) {
      $("scan-note").textContent = `error: ${e}`;
    } finally {
      busy($("diagram"), false);
    }
  }, 20);
}

function runStability() {
  const q1 = parseFloat($("q1s").value);
  try {
    const r = JSON.parse(stability_json(q1));
    const rows = r.eigenvalues
      .map(([re, im]) => `  ${re.toExponential(6).padStart(14)}  ${im >= 0 ? "+" : "-"}${Math.abs(im).toExponential(6)}i`)
      .join("\n");
    $("eigs").textContent =
      `classification: ${r.classification}   max Re λ = ${r.max_real_part.toExponential(6)}   N = ${r.n}\n${rows}`;
  } catch (e) {
    $("eigs").textContent = `error: ${e}`;
  }
}

await init();
$("q1").addEventListener("input", () => ($("q1v").value = parseFloat($("q1").value).toFixed(3)));
$("q1s").addEventListener("input", () => ($("q1sv").value = parseFloat($("q1s").value).toFixed(3)));
$("run").addEventListener("click", runSimulation);
$("scan").addEventListener("click", runScan);
$("stab").addEventListener("click", runStability);
runSimulation();
runStability();
