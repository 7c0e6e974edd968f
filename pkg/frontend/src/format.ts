// Display formatting. Probabilities render with exactly three decimals
// using round-half-even, matching the service's own rounding convention
// so a wire value of 0.4135 and 0.4145 both display as "0.414".

export function roundHalfEven(value: number, decimals: number): number {
  const scale = Math.pow(10, decimals);
  const scaled = value * scale;
  const floor = Math.floor(scaled);
  const frac = scaled - floor;
  const eps = 1e-9 * Math.max(1, Math.abs(scaled));
  let n: number;
  if (Math.abs(frac - 0.5) < eps) {
    n = floor % 2 === 0 ? floor : floor + 1; // tie: pick the even neighbor
  } else {
    n = Math.round(scaled);
  }
  return n / scale;
}

export function formatProbability(value: number): string {
  return roundHalfEven(value, 3).toFixed(3);
}

export function formatPercent(value: number): string {
  return (roundHalfEven(value, 3) * 100).toFixed(1) + "%";
}
