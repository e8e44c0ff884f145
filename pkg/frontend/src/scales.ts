/** Linear and log axis scales with simple tick selection. */

export interface Scale {
  (value: number): number;
  ticks(): number[];
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  scale.ticks = () => linearTicks(d0, d1, 6);
  return scale;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const d0 = Math.log10(Math.max(domain[0], 1e-12));
  const d1 = Math.log10(Math.max(domain[1], 1e-12));
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((value: number) =>
    r0 + ((Math.log10(Math.max(value, 1e-12)) - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  scale.ticks = () => {
    const ticks: number[] = [];
    for (let exp = Math.floor(d0); exp <= Math.ceil(d1); exp++) {
      for (const mult of [1, 2, 5]) {
        const tick = mult * 10 ** exp;
        if (tick >= domain[0] * 0.999 && tick <= domain[1] * 1.001) ticks.push(tick);
      }
    }
    return ticks;
  };
  return scale;
}

export function linearTicks(lo: number, hi: number, count: number): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / count;
  const magnitude = 10 ** Math.floor(Math.log10(rawStep));
  const candidates = [1, 2, 2.5, 5, 10].map((m) => m * magnitude);
  const step = candidates.find((c) => c >= rawStep) ?? candidates[candidates.length - 1];
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let value = start; value <= hi + 1e-9 * step; value += step) {
    ticks.push(Math.abs(value) < step * 1e-9 ? 0 : value);
  }
  return ticks;
}

export function tickLabel(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1000 || abs < 0.01) return value.toExponential(1);
  return String(Math.round(value * 1000) / 1000);
}
