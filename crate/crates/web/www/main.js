import init, { generate, solve, validate } from "./pkg/parcbs_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const state = { map: "", scen: "", paths: [], bad: [] };

function show(obj) {
  $("status").textContent = typeof obj === "string" ? obj : JSON.stringify(obj, null, 2);
}

function parseMap(text) {
  const lines = text.trim().split("\n");
  const h = Number(lines[1].split(" ")[1]);
  const w = Number(lines[2].split(" ")[1]);
  return { w, h, rows: lines.slice(4, 4 + h) };
}

function parseScen(text) {
  return text.trim().split("\n").slice(1).map((line) => {
    const f = line.split("\t").map(Number);
    return { start: [f[4], f[5]], goal: [f[6], f[7]] };
  });
}

function parsePlan(text) {
  return text.trim().split("\n").filter((l) => l && !l.startsWith("#")).map((l) =>
    [...l.matchAll(/\((\d+),(\d+)\)/g)].map((m) => [Number(m[1]), Number(m[2])]));
}

function draw() {
  const cv = $("view");
  const ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  if (!state.map) return;
  const { w, h, rows } = parseMap(state.map);
  const s = Math.max(2, Math.floor(Math.min(cv.width / w, cv.height / h)));
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      ctx.fillStyle = ".G".includes(rows[y][x]) ? "#fff" : "#333";
      ctx.fillRect(x * s, y * s, s, s);
    }
  }
  const robots = parseScen(state.scen);
  const hue = (i) => `hsl(${(i * 137.5) % 360} 70% 45%)`;
  const mid = (c) => [c[0] * s + s / 2, c[1] * s + s / 2];
  state.paths.forEach((p, i) => {
    ctx.strokeStyle = hue(i);
    ctx.lineWidth = Math.max(1, s / 6);
    ctx.beginPath();
    p.forEach((c, t) => (t ? ctx.lineTo(...mid(c)) : ctx.moveTo(...mid(c))));
    ctx.stroke();
  });
  robots.forEach((r, i) => {
    ctx.fillStyle = hue(i);
    ctx.beginPath();
    ctx.arc(...mid(r.start), s / 3, 0, 2 * Math.PI);
    ctx.fill();
    ctx.strokeStyle = hue(i);
    ctx.lineWidth = 1.5;
    ctx.strokeRect(r.goal[0] * s + s / 6, r.goal[1] * s + s / 6, (2 * s) / 3, (2 * s) / 3);
  });
  ctx.strokeStyle = "red";
  ctx.lineWidth = 2;
  for (const cell of state.bad) {
    ctx.strokeRect(cell[0] * s, cell[1] * s, s, s);
  }
}

function guard(f) {
  return () => {
    try {
      f();
    } catch (e) {
      show(`error: ${e.message ?? e}`);
    }
  };
}

$("generate").onclick = guard(() => {
  const out = JSON.parse(
    generate(num("width"), num("height"), num("density"), num("map-seed"), num("agents"), num("seed")),
  );
  Object.assign(state, { map: out.map, scen: out.scen, paths: [], bad: [] });
  $("plan").value = "";
  show(`${parseScen(out.scen).length} robots on a ${num("width")}x${num("height")} map`);
  draw();
});

$("solve").onclick = guard(() => {
  if (!state.map) return show("generate an instance first");
  show("solving...");
  // Let the status repaint before the solver blocks the page.
  setTimeout(guard(() => {
    const out = JSON.parse(solve(state.map, state.scen, $("algo").value, num("w"), num("timeout"), num("seed")));
    Object.assign(state, { paths: out.paths, bad: [] });
    $("plan").value = out.plan;
    show(out.record);
    draw();
  }), 20);
});

$("validate").onclick = guard(() => {
  if (!state.map) return show("generate an instance first");
  const report = JSON.parse(validate(state.map, state.scen, $("plan").value));
  state.paths = parsePlan($("plan").value);
  state.bad = report.violations.filter((v) => v.cell).map((v) => v.cell);
  show(report);
  draw();
});

await init();
show("ready");
