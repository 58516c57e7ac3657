(paths) => {
  const dpr = window.devicePixelRatio || 1;
  const ctx = document.createElement("canvas").getContext("2d");

  const resolve = (path) => {
    let node = document.documentElement;
    for (const i of path) {
      if (!node || i >= node.childNodes.length) return null;
      node = node.childNodes[i];
    }
    return node;
  };

  const transform = (ch, tt, wordStart) => {
    if (tt === "uppercase") return ch.toUpperCase();
    if (tt === "lowercase") return ch.toLowerCase();
    if (tt === "capitalize" && wordStart) return ch.toUpperCase();
    return ch;
  };

  // Glyph ink of a text node: per rendered line, horizontal extent from the
  // first and last glyph origins plus their ink overhangs, vertical extent
  // from the line baseline plus the line's ink ascent and descent.
  const textInk = (node) => {
    const el = node.parentElement;
    if (!el) return null;
    const cs = getComputedStyle(el);
    ctx.font = `${cs.fontStyle} ${cs.fontWeight} ${cs.fontSize} ${cs.fontFamily}`;
    const tt = cs.textTransform;
    const range = document.createRange();
    const lines = [];
    const data = node.data;
    for (let i = 0; i < data.length; i++) {
      const raw = data[i];
      if (/\s/.test(raw)) continue;
      range.setStart(node, i);
      range.setEnd(node, i + 1);
      const rects = range.getClientRects();
      if (!rects.length || rects[0].height === 0) continue;
      const r = rects[0];
      const ch = transform(raw, tt, i === 0 || /\s/.test(data[i - 1]));
      let line = lines.find((l) => Math.abs(l.top - r.top) < 0.5 && Math.abs(l.height - r.height) < 0.5);
      if (!line) {
        line = { top: r.top, height: r.height, chars: [] };
        lines.push(line);
      }
      line.chars.push({ ch, left: r.left });
    }
    let out = null;
    for (const line of lines) {
      const text = line.chars.map((c) => c.ch).join("");
      const m = ctx.measureText(text);
      const first = line.chars[0];
      const last = line.chars[line.chars.length - 1];
      const mf = ctx.measureText(first.ch);
      const ml = ctx.measureText(last.ch);
      const baseline = line.top + m.fontBoundingBoxAscent;
      const ink = {
        left: first.left - mf.actualBoundingBoxLeft,
        right: last.left + ml.actualBoundingBoxRight,
        top: baseline - m.actualBoundingBoxAscent,
        bottom: baseline + m.actualBoundingBoxDescent,
      };
      if (ink.right <= ink.left || ink.bottom <= ink.top) continue;
      out = out
        ? {
            left: Math.min(out.left, ink.left),
            right: Math.max(out.right, ink.right),
            top: Math.min(out.top, ink.top),
            bottom: Math.max(out.bottom, ink.bottom),
          }
        : ink;
    }
    return out;
  };

  return paths.map((path) => {
    const node = resolve(path);
    if (!node) return null;
    let box;
    if (node.nodeType === Node.TEXT_NODE) {
      box = textInk(node);
    } else if (node.nodeType === Node.ELEMENT_NODE) {
      const r = node.getBoundingClientRect();
      box = { left: r.left, right: r.right, top: r.top, bottom: r.bottom };
    } else {
      return null;
    }
    if (!box) return [0, 0, 0, 0];
    return [
      Math.floor((box.left + window.scrollX) * dpr),
      Math.floor((box.top + window.scrollY) * dpr),
      Math.ceil((box.right + window.scrollX) * dpr),
      Math.ceil((box.bottom + window.scrollY) * dpr),
    ];
  });
}
