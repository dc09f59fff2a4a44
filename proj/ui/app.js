"use strict";

const geometry = { d: 30, l1: 25, l2: 40, skin: -55 };
const store = { connected: false, latest: null, states: 0, skipped: 0, prompt: null, held: new Set() };

function post(message) {
  if (!store.connected) return;
  fetch("/bridge", { method: "POST", headers: { "Content-Type": "application/json" }, body: JSON.stringify(message) })
    .catch(() => {});
}

function tap(channel, kind) {
  if (kind === "Press") {
    if (store.held.has(channel)) return;
    store.held.add(channel);
  } else {
    if (!store.held.has(channel)) return;
    store.held.delete(channel);
  }
  const force = kind === "Press" ? Number(document.getElementById("force").value) : 0;
  post({ type: "tap", channel, kind, force_n: force, t_us: Math.round(performance.now() * 1000) });
  const pad = document.querySelector(`.pad[data-channel="${channel}"]`);
  pad.classList.toggle("down", kind === "Press");
}

function releaseAll() {
  for (const ch of [...store.held]) tap(ch, "Release");
}

function setConnected(ok) {
  if (!ok) releaseAll();
  store.connected = ok;
  document.getElementById("banner").hidden = ok;
  document.getElementById("tapper").classList.toggle("disabled", !ok);
}

function validState(m) {
  return Array.isArray(m.linkages) && m.linkages.length === 3 &&
    m.linkages.every(l => typeof l.x_mm === "number" && typeof l.y_mm === "number" &&
      typeof l.in_contact === "boolean" && typeof l.depth_mm === "number");
}

function onMessage(m) {
  switch (m.type) {
    case "state":
      if (!validState(m)) { store.skipped++; return; }
      store.latest = m;
      store.states++;
      break;
    case "prompt":
      store.prompt = m.trial_index;
      document.getElementById("trial-status").textContent = `Trial ${m.trial_index + 1}: which melody was it?`;
      for (const b of document.querySelectorAll(".answers button")) b.disabled = false;
      break;
    default:
      console.warn("ignoring bridge message", m);
  }
}

function connect() {
  const source = new EventSource("/bridge");
  source.onopen = () => setConnected(true);
  source.onerror = () => setConnected(false);
  source.onmessage = ev => {
    try { onMessage(JSON.parse(ev.data)); } catch (e) { store.skipped++; }
  };
}

function elbow(theta, base) {
  return [base + geometry.l1 * Math.cos(theta), geometry.l1 * Math.sin(theta)];
}

function inverse(x, y) {
  // Elbows-out solution, matching the core solver.
  const solve = (bx, sign) => {
    const dx = x - bx, dy = y, r = Math.hypot(dx, dy);
    const phi = Math.atan2(dy, dx);
    const c = (geometry.l1 ** 2 + r * r - geometry.l2 ** 2) / (2 * geometry.l1 * r);
    return phi + sign * Math.acos(Math.max(-1, Math.min(1, c)));
  };
  return [solve(0, -1), solve(geometry.d, 1)];
}

function draw() {
  const canvas = document.getElementById("linkages");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const scale = 3;
  const links = store.latest ? store.latest.linkages :
    [0, 1, 2].map(() => ({ x_mm: geometry.d / 2, y_mm: geometry.skin + 5, in_contact: false, depth_mm: 0 }));
  links.forEach((l, i) => {
    const ox = 60 + i * 230, oy = 40;
    const px = v => ox + v[0] * scale, py = v => oy - v[1] * scale;
    ctx.strokeStyle = "#999";
    ctx.beginPath();
    ctx.moveTo(ox - 20, oy - geometry.skin * scale);
    ctx.lineTo(ox + (geometry.d + 20) * scale, oy - geometry.skin * scale);
    ctx.stroke();
    const [t1, t2] = inverse(l.x_mm, l.y_mm);
    const e1 = elbow(t1, 0), e2 = elbow(t2, geometry.d), p = [l.x_mm, l.y_mm];
    ctx.strokeStyle = "#333";
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.moveTo(px([0, 0]), py([0, 0])); ctx.lineTo(px(e1), py(e1)); ctx.lineTo(px(p), py(p));
    ctx.lineTo(px(e2), py(e2)); ctx.lineTo(px([geometry.d, 0]), py([geometry.d, 0]));
    ctx.stroke();
    ctx.fillStyle = l.in_contact ? "#e74c3c" : "#2e86de";
    ctx.beginPath();
    ctx.arc(px(p), py(p), l.in_contact ? 8 : 5, 0, 2 * Math.PI);
    ctx.fill();
  });
  document.getElementById("debug").textContent = `states ${store.states}, skipped ${store.skipped}`;
  requestAnimationFrame(draw);
}

function setup() {
  for (const b of document.querySelectorAll("nav button")) {
    b.onclick = () => {
      for (const o of document.querySelectorAll("nav button")) o.classList.toggle("active", o === b);
      for (const s of document.querySelectorAll("section")) s.hidden = s.id !== b.dataset.view;
    };
  }
  for (const pad of document.querySelectorAll(".pad")) {
    const ch = Number(pad.dataset.channel);
    pad.onpointerdown = e => { pad.setPointerCapture(e.pointerId); tap(ch, "Press"); };
    pad.onpointerup = () => tap(ch, "Release");
    pad.onpointercancel = () => tap(ch, "Release");
    pad.onpointerleave = () => tap(ch, "Release");
  }
  const keys = { j: 1, k: 2, l: 3 };
  window.onkeydown = e => { const ch = keys[e.key.toLowerCase()]; if (ch && !e.repeat) tap(ch, "Press"); };
  window.onkeyup = e => { const ch = keys[e.key.toLowerCase()]; if (ch) tap(ch, "Release"); };
  window.onblur = releaseAll;
  const force = document.getElementById("force");
  force.oninput = () => { document.getElementById("force-value").textContent = force.value; };
  for (const b of document.querySelectorAll(".answers button")) {
    b.onclick = () => {
      if (store.prompt === null) return;
      store.prompt = null;
      for (const o of document.querySelectorAll(".answers button")) o.disabled = true;
      document.getElementById("trial-status").textContent = "Answer sent. Waiting for the next prompt.";
      post({ type: "answer", melody: b.dataset.melody });
    };
  }
  setConnected(false);
  connect();
  requestAnimationFrame(draw);
}

setup();
