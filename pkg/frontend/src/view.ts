// Render models: pure functions from a service response to the exact
// strings and geometry the DOM will show. Keeping these side-effect
// free lets the display contract be tested without a browser; the DOM
// writer in main.ts copies the strings verbatim.

import type { EndpointName, PredictionResponse } from "./api.js";
import { ENDPOINTS, ENDPOINT_LABELS } from "./api.js";
import { formatProbability } from "./format.js";
import { HORIZONS } from "./form.js";

export interface RiskReadout {
  endpoint: EndpointName;
  label: string;
  value: string; // three-decimal probability, or "—" when not loaded
  extrapolated: boolean;
}

export interface PanelModel {
  horizon: number;
  risks: RiskReadout[];
  sss: { score: string; fiveYearRisk: string } | null;
}

export function panelModel(
  response: PredictionResponse,
  horizon: number,
): PanelModel {
  const risks: RiskReadout[] = [];
  for (const endpoint of ENDPOINTS) {
    const curve = response.predictions[endpoint];
    const point = curve?.find((p) => p.horizon_years === horizon);
    risks.push({
      endpoint,
      label: ENDPOINT_LABELS[endpoint],
      value: point ? formatProbability(point.probability) : "—",
      extrapolated: point?.extrapolated ?? false,
    });
  }
  return {
    horizon,
    risks,
    sss: response.sss
      ? {
          score: String(response.sss.score),
          fiveYearRisk: formatProbability(response.sss.five_year_risk),
        }
      : null,
  };
}

// --- risk curve geometry ---------------------------------------------------

const WIDTH = 480;
const HEIGHT = 220;
const PAD = { left: 44, right: 12, top: 12, bottom: 28 };

const CURVE_COLORS: Record<EndpointName, string> = {
  late_amd: "#b4462c",
  ga: "#2c6ab4",
  nv: "#4c9a4c",
};

function x(h: number): number {
  const span = WIDTH - PAD.left - PAD.right;
  return PAD.left + ((h - 1) / (HORIZONS.length - 1)) * span;
}

function y(p: number): number {
  const span = HEIGHT - PAD.top - PAD.bottom;
  return PAD.top + (1 - p) * span;
}

export function curveSvg(response: PredictionResponse, horizon: number): string {
  const parts: string[] = [
    `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" role="img" aria-label="progression risk by year">`,
  ];
  for (const frac of [0, 0.25, 0.5, 0.75, 1]) {
    const gy = y(frac).toFixed(1);
    parts.push(
      `<line x1="${PAD.left}" y1="${gy}" x2="${WIDTH - PAD.right}" y2="${gy}" class="grid"/>`,
      `<text x="${PAD.left - 6}" y="${gy}" class="tick" text-anchor="end" dominant-baseline="middle">${frac.toFixed(2)}</text>`,
    );
  }
  for (const h of HORIZONS) {
    parts.push(
      `<text x="${x(h).toFixed(1)}" y="${HEIGHT - 8}" class="tick" text-anchor="middle">${h}</text>`,
    );
  }
  const hx = x(horizon).toFixed(1);
  parts.push(
    `<line x1="${hx}" y1="${PAD.top}" x2="${hx}" y2="${HEIGHT - PAD.bottom}" class="horizon-mark"/>`,
  );
  for (const endpoint of ENDPOINTS) {
    const curve = response.predictions[endpoint];
    if (!curve || curve.length === 0) continue;
    const pts = curve
      .map((p) => `${x(p.horizon_years).toFixed(1)},${y(p.probability).toFixed(1)}`)
      .join(" ");
    const color = CURVE_COLORS[endpoint];
    parts.push(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="2"/>`);
    const sel = curve.find((p) => p.horizon_years === horizon);
    if (sel) {
      parts.push(
        `<circle cx="${x(sel.horizon_years).toFixed(1)}" cy="${y(sel.probability).toFixed(1)}" r="4" fill="${color}"/>`,
      );
    }
  }
  parts.push("</svg>");
  return parts.join("");
}
