// Minimal dependency-free canvas charts. Numeric parsing here is only
// for pixel geometry; every label shown to the user is a server string.

export interface Series {
  label: string;
  xs: number[];
  ys: number[];
  color: string;
  dashed?: boolean;
}

export function drawLines(
  canvas: HTMLCanvasElement,
  series: Series[],
  yMinLabel?: string,
  yMaxLabel?: string,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  const pad = { left: 46, right: 8, top: 8, bottom: 18 };

  const allX = series.flatMap((s) => s.xs);
  const allY = series.flatMap((s) => s.ys);
  if (allX.length === 0) return;
  const xMin = Math.min(...allX);
  const xMax = Math.max(...allX);
  let yMin = Math.min(...allY);
  let yMax = Math.max(...allY);
  if (yMin === yMax) {
    yMin -= 0.5;
    yMax += 0.5;
  }
  const sx = (x: number) =>
    pad.left + ((x - xMin) / Math.max(1e-9, xMax - xMin)) * (w - pad.left - pad.right);
  const sy = (y: number) =>
    h - pad.bottom - ((y - yMin) / (yMax - yMin)) * (h - pad.top - pad.bottom);

  ctx.strokeStyle = "#ccc";
  ctx.lineWidth = 1;
  ctx.strokeRect(pad.left, pad.top, w - pad.left - pad.right, h - pad.top - pad.bottom);

  ctx.fillStyle = "#555";
  ctx.font = "10px sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(yMaxLabel ?? String(yMax), 2, pad.top + 8);
  ctx.fillText(yMinLabel ?? String(yMin), 2, h - pad.bottom);
  ctx.textAlign = "center";
  ctx.fillText(String(xMin), pad.left, h - 4);
  ctx.fillText(String(xMax), w - pad.right - 6, h - 4);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.5;
    ctx.setLineDash(s.dashed ? [5, 3] : []);
    ctx.beginPath();
    s.xs.forEach((x, i) => {
      const px = sx(x);
      const py = sy(s.ys[i]);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
  ctx.setLineDash([]);
}
