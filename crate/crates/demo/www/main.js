import init, { annotate, huffman, benchmark } from "./pkg/annembed_demo.js";

const $ = (id) => document.getElementById(id);

function escape(s) {
  return String(s).replace(/[&<>]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;" }[c]));
}

function table(headers, rows) {
  const head = headers.map((h) => `<th>${escape(h)}</th>`).join("");
  const body = rows.map((r) => `<tr>${r.map((c) => `<td>${escape(c)}</td>`).join("")}</tr>`).join("");
  return `<table><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

function guarded(out, fn) {
  return () => {
    try {
      out.innerHTML = fn();
    } catch (e) {
      out.innerHTML = `<p class="error">${escape(e)}</p>`;
    }
  };
}

await init();

$("annotate").onclick = guarded($("annotate-out"), () => {
  const r = JSON.parse(annotate($("triples").value, $("types").value, $("vocab").value));
  const rows = r.annotations
    .split("\n")
    .filter((l) => l && !l.startsWith("#"))
    .map((l) => l.split("\t"));
  return `<h3>${r.predicates.length} predicate-argument structures</h3><pre>${escape(r.predicates.join("\n"))}</pre>`
    + table(["token", "annotations"], rows);
});

$("huffman").onclick = guarded($("huffman-out"), () => {
  const r = JSON.parse(huffman($("freqs").value));
  return table(["leaf", "frequency", "code", "length"], r.codes.map((c, i) => [i, c.frequency, c.code, c.code.length]))
    + `<p>weighted code length: ${r.weighted_length}</p>`;
});

$("bench").onclick = () => {
  const out = $("bench-out");
  out.textContent = "training...";
  setTimeout(guarded(out, () => {
    const t0 = performance.now();
    const r = JSON.parse(benchmark(+$("corpus-seed").value, +$("seed").value, +$("dim").value));
    const ms = Math.round(performance.now() - t0);
    const rows = r.runs.map((run) => [
      run.mode, run.mrr.toFixed(4), run.partner_rank,
      run.nearest.map((n) => `${n.token} (${n.cosine.toFixed(2)})`).join(", "),
    ]);
    return table(["model", "score", `rank of ${r.partner} for ${r.query}`, `nearest names to ${r.query}`], rows)
      + `<p>${r.universe} names in the universe, ${ms} ms</p>`;
  }), 10);
};
