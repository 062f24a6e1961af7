// Minimal linear scaling for presentation. Mapping data to pixels is layout,
// not analysis; the raw values always ride along in data attributes.

export interface Scale {
  (value: number): number;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!isFinite(lo)) return [0, 1];
  return [lo, hi];
}

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0;
  if (span === 0) {
    const mid = (r0 + r1) / 2;
    return () => mid;
  }
  return (value: number) => r0 + ((value - d0) / span) * (r1 - r0);
}

/** Scale over the padded extent of the values. */
export function paddedScale(values: number[], r0: number, r1: number, pad = 0.05): Scale {
  const [lo, hi] = extent(values);
  const slack = (hi - lo) * pad;
  return linearScale(lo - slack, hi + slack, r0, r1);
}
