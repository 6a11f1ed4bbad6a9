// Canvas line rendering for waveform pairs and the optional spectrogram
// view. Both plots of a pair share one y-range so neither slot gets a
// scale tell.

export interface Range {
  lo: number;
  hi: number;
}

export function sharedRange(a: number[], b: number[], margin = 0.05): Range {
  let lo = Infinity;
  let hi = -Infinity;
  for (const series of [a, b]) {
    for (const v of series) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!isFinite(lo) || !isFinite(hi)) {
    lo = -1;
    hi = 1;
  }
  if (hi === lo) {
    hi = lo + 1;
  }
  const pad = (hi - lo) * margin;
  return { lo: lo - pad, hi: hi + pad };
}

/** Map a sample to canvas coordinates; exported for the point-mapping tests. */
export function toCanvasY(value: number, range: Range, height: number): number {
  return height - ((value - range.lo) / (range.hi - range.lo)) * height;
}

type Context2D = Pick<CanvasRenderingContext2D,
  "clearRect" | "beginPath" | "moveTo" | "lineTo" | "stroke" | "fillRect"> & {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
};

export function drawWaveform(ctx: Context2D, points: number[], range: Range,
                             width: number, height: number,
                             color = "#2563eb"): void {
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, width, height);
  ctx.clearRect(0, 0, width, height);
  // zero line
  ctx.strokeStyle = "#d4d4d8";
  ctx.lineWidth = 1;
  ctx.beginPath();
  const zeroY = toCanvasY(0, range, height);
  ctx.moveTo(0, zeroY);
  ctx.lineTo(width, zeroY);
  ctx.stroke();

  ctx.strokeStyle = color;
  ctx.lineWidth = 1;
  ctx.beginPath();
  const step = width / Math.max(points.length - 1, 1);
  points.forEach((v, i) => {
    const x = i * step;
    const y = toCanvasY(v, range, height);
    if (i === 0) {
      ctx.moveTo(x, y);
    } else {
      ctx.lineTo(x, y);
    }
  });
  ctx.stroke();
}

/** Grayscale spectrogram cells, frames along x, frequency bins up the y axis. */
export function drawSpectrogram(ctx: Context2D, magnitude: number[][],
                                width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  const frames = magnitude.length;
  const bins = magnitude[0]?.length ?? 0;
  if (!frames || !bins) {
    return;
  }
  let hi = -Infinity;
  for (const row of magnitude) {
    for (const v of row) {
      const db = 20 * Math.log10(Math.max(v, 1e-12));
      if (db > hi) hi = db;
    }
  }
  const lo = hi - 80;
  const cellW = width / frames;
  const cellH = height / bins;
  for (let f = 0; f < frames; f++) {
    for (let b = 0; b < bins; b++) {
      const db = 20 * Math.log10(Math.max(magnitude[f][b], 1e-12));
      const shade = Math.round(
        255 * Math.min(Math.max((db - lo) / (hi - lo), 0), 1));
      ctx.fillStyle = `rgb(${shade},${shade},${shade})`;
      ctx.fillRect(f * cellW, height - (b + 1) * cellH, cellW + 0.5, cellH + 0.5);
    }
  }
}
