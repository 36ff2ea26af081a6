// Build the bindings first (see README):
//   cargo build -p ucmec-wasm --target wasm32-unknown-unknown --release
//   wasm-bindgen --target web --out-dir crates/wasm/www/pkg \
//     target/wasm32-unknown-unknown/release/ucmec_wasm.wasm
import init, { draw_network, optimize, elect } from "./pkg/ucmec_wasm.js";

const $ = (id) => document.getElementById(id);
const out = $("out");
const canvas = $("map");
const ctx = canvas.getContext("2d");

function params() {
  return {
    aps: Number($("aps").value),
    users: Number($("users").value),
    seed: BigInt($("seed").value),
    block: Number($("block").value),
    scheme: $("scheme").value,
  };
}

function parseNodes(text) {
  const aps = [];
  const users = [];
  for (const line of text.trim().split("\n")) {
    const f = line.split(",");
    const node = { id: Number(f[1]), x: Number(f[2]), y: Number(f[3]) };
    (f[0] === "ap" ? aps : users).push(node);
  }
  return { aps, users };
}

// shares[m][n] is the fraction of user n's task served by AP m.
function draw(nodes, shares, leader) {
  const scale = canvas.width / 220;
  const px = (p) => [canvas.width / 2 + p.x * scale, canvas.height / 2 - p.y * scale];
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.beginPath();
  ctx.arc(canvas.width / 2, canvas.height / 2, 100 * scale, 0, 2 * Math.PI);
  ctx.strokeStyle = "#ddd";
  ctx.stroke();
  if (shares) {
    nodes.aps.forEach((ap, m) => {
      nodes.users.forEach((u, n) => {
        const a = shares[m][n];
        if (a <= 0) return;
        const [x1, y1] = px(ap);
        const [x2, y2] = px(u);
        ctx.beginPath();
        ctx.moveTo(x1, y1);
        ctx.lineTo(x2, y2);
        ctx.strokeStyle = `rgba(30, 100, 200, ${0.2 + 0.8 * a})`;
        ctx.lineWidth = 1 + 3 * a;
        ctx.stroke();
      });
    });
  }
  ctx.lineWidth = 1;
  for (const ap of nodes.aps) {
    const [x, y] = px(ap);
    ctx.fillStyle = ap.id === leader ? "#d33" : "#222";
    ctx.fillRect(x - 5, y - 5, 10, 10);
    ctx.fillText(`AP${ap.id}`, x + 7, y - 7);
  }
  for (const u of nodes.users) {
    const [x, y] = px(u);
    ctx.beginPath();
    ctx.arc(x, y, 4, 0, 2 * Math.PI);
    ctx.fillStyle = "#2a2";
    ctx.fill();
  }
}

function guarded(f) {
  return () => {
    try {
      f();
    } catch (e) {
      out.textContent = `error: ${e.message ?? e}`;
    }
  };
}

function nodesFor(p) {
  return parseNodes(draw_network(p.aps, p.users, p.seed));
}

await init();
out.textContent = "Ready.";

$("draw").onclick = guarded(() => {
  const p = params();
  const text = draw_network(p.aps, p.users, p.seed);
  draw(parseNodes(text), null, -1);
  out.textContent = text;
});

$("optimize").onclick = guarded(() => {
  const p = params();
  out.textContent = "Optimizing…";
  const text = optimize(p.aps, p.users, p.block, p.seed, p.scheme);
  const [summary, ...rows] = text.trim().split("\n");
  const shares = rows.map((r) => r.split(",").map(Number));
  draw(nodesFor(p), shares, -1);
  out.textContent = `${summary.split(" ").join("\n")}\n\nclustering (AP rows, user columns):\n${rows.join("\n")}`;
});

$("elect").onclick = guarded(() => {
  const p = params();
  const text = elect(p.aps, p.users, p.seed, $("random").checked);
  const leader = Number(/leader=(\d+)/.exec(text)[1]);
  draw(nodesFor(p), null, leader);
  out.textContent = text;
});
