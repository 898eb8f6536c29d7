// Client-side copy of the server's retouch operator, used only for the live
// slider preview. The server stays authoritative once a pair is committed.

export interface RetouchParams {
  gamma: number;
  exposure_ev: number;
  contrast: number;
  saturation: number;
  temperature_shift: number;
}

export const IDENTITY: Readonly<RetouchParams> = {
  gamma: 1,
  exposure_ev: 0,
  contrast: 1,
  saturation: 1,
  temperature_shift: 0,
};

export interface SliderRange {
  min: number;
  max: number;
  step: number;
}

/** Slider bounds; every value inside them satisfies the operator's invariants. */
export const RANGES: Readonly<Record<keyof RetouchParams, SliderRange>> = {
  exposure_ev: { min: -2, max: 2, step: 0.05 },
  contrast: { min: 0.25, max: 3, step: 0.05 },
  saturation: { min: 0, max: 2.5, step: 0.05 },
  temperature_shift: { min: -0.6, max: 0.6, step: 0.01 },
  gamma: { min: 0.3, max: 3, step: 0.05 },
};

const LUMA = [0.2126, 0.7152, 0.0722] as const;

export function validate(p: RetouchParams): string[] {
  const errors: string[] = [];
  for (const key of Object.keys(RANGES) as (keyof RetouchParams)[]) {
    const v = p[key];
    const r = RANGES[key];
    if (!Number.isFinite(v)) errors.push(`${key} must be a number`);
    else if (v < r.min || v > r.max) errors.push(`${key} must lie in [${r.min}, ${r.max}]`);
  }
  return errors;
}

/** Clamps each field into its slider range. */
export function clampParams(p: RetouchParams): RetouchParams {
  const out = { ...p };
  for (const key of Object.keys(RANGES) as (keyof RetouchParams)[]) {
    const r = RANGES[key];
    const v = Number.isFinite(out[key]) ? out[key] : IDENTITY[key];
    out[key] = Math.min(r.max, Math.max(r.min, v));
  }
  return out;
}

export function isIdentity(p: RetouchParams): boolean {
  return (Object.keys(IDENTITY) as (keyof RetouchParams)[]).every((k) => p[k] === IDENTITY[k]);
}

export function contrastCurve(v: number, c: number): number {
  if (v <= 0) return 0;
  if (v >= 1) return 1;
  const a = Math.pow(v, c);
  const b = Math.pow(1 - v, c);
  return a / (a + b);
}

const clamp01 = (v: number) => (v < 0 ? 0 : v > 1 ? 1 : v);

/** Applies the operator chain to one pixel given as [0,1] floats. */
export function retouchPixel(rgb: [number, number, number], p: RetouchParams): [number, number, number] {
  let [r, g, b] = rgb;
  if (p.exposure_ev !== 0) {
    const k = Math.pow(2, p.exposure_ev);
    r = clamp01(r * k);
    g = clamp01(g * k);
    b = clamp01(b * k);
  }
  if (p.temperature_shift !== 0) {
    r = clamp01(r * (1 + p.temperature_shift));
    b = clamp01(b * (1 - p.temperature_shift));
  }
  if (p.gamma !== 1) {
    r = clamp01(Math.pow(r, p.gamma));
    g = clamp01(Math.pow(g, p.gamma));
    b = clamp01(Math.pow(b, p.gamma));
  }
  if (p.contrast !== 1) {
    r = contrastCurve(r, p.contrast);
    g = contrastCurve(g, p.contrast);
    b = contrastCurve(b, p.contrast);
  }
  if (p.saturation !== 1) {
    const y = LUMA[0] * r + LUMA[1] * g + LUMA[2] * b;
    r = clamp01(y + p.saturation * (r - y));
    g = clamp01(y + p.saturation * (g - y));
    b = clamp01(y + p.saturation * (b - y));
  }
  return [r, g, b];
}

/**
 * RGBA bytes in, RGBA bytes out (alpha copied). Identity parameters return an
 * exact copy so an untouched slider set previews pixel-identical to the source.
 */
export function applyRetouch(src: Uint8ClampedArray, p: RetouchParams): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(src);
  if (isIdentity(p)) return out;
  for (let i = 0; i < src.length; i += 4) {
    const [r, g, b] = retouchPixel([src[i] / 255, src[i + 1] / 255, src[i + 2] / 255], p);
    out[i] = Math.round(r * 255);
    out[i + 1] = Math.round(g * 255);
    out[i + 2] = Math.round(b * 255);
  }
  return out;
}
