// DOM wiring. All strings shown in the risk panel come from the render
// models in view.ts, which in turn only reformat service responses;
// nothing here computes a probability.

import { RiskClient, ServiceFailure } from "./api.js";
import type { PredictionResponse } from "./api.js";
import { DEBOUNCE_MS, RecalcController } from "./controller.js";
import {
  ARMS2_OPTIONS,
  CFH_OPTIONS,
  DRUSEN_OPTIONS,
  HORIZONS,
  PIGMENT_OPTIONS,
  SMOKING_OPTIONS,
  initialForm,
  setHorizon,
  toDocument,
  validate,
} from "./form.js";
import type { FormState } from "./form.js";
import { curveSvg, panelModel } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function fillSelect(select: HTMLSelectElement, options: readonly (string | number)[]): void {
  for (const opt of options) {
    const o = document.createElement("option");
    o.value = String(opt);
    o.textContent = String(opt) === "" ? "not provided" : String(opt).replace("_", "/");
    select.appendChild(o);
  }
}

function main(): void {
  let form: FormState = initialForm();
  let lastGood: PredictionResponse | null = null;

  const selects: Record<string, readonly (string | number)[]> = {
    "drusen-left": DRUSEN_OPTIONS,
    "drusen-right": DRUSEN_OPTIONS,
    "pigment-left": PIGMENT_OPTIONS,
    "pigment-right": PIGMENT_OPTIONS,
    smoking: SMOKING_OPTIONS,
    cfh: CFH_OPTIONS,
    arms2: ARMS2_OPTIONS,
    horizon: HORIZONS,
  };
  for (const [id, options] of Object.entries(selects)) {
    fillSelect(el<HTMLSelectElement>(id), options);
  }
  el<HTMLSelectElement>("horizon").value = String(form.horizon);
  el<HTMLInputElement>("age").value = form.age;

  const client = new RiskClient((url, init) => fetch(url, init));

  const render = (response: PredictionResponse) => {
    const model = panelModel(response, form.horizon);
    for (const readout of model.risks) {
      const cell = el(`risk-${readout.endpoint}`);
      cell.textContent = readout.value;
      el(`flag-${readout.endpoint}`).textContent = readout.extrapolated
        ? "beyond observed follow-up"
        : "";
    }
    const sssBlock = el("sss-block");
    if (model.sss) {
      sssBlock.hidden = false;
      el("sss-score").textContent = model.sss.score;
      el("sss-risk").textContent = model.sss.fiveYearRisk;
    } else {
      sssBlock.hidden = true;
    }
    el("curve").innerHTML = curveSvg(response, form.horizon);
    el("horizon-label").textContent = String(form.horizon);
  };

  const banner = el("banner");
  const retry = el<HTMLButtonElement>("retry");
  const staleMark = el("stale");

  const controller = new RecalcController<ReturnType<typeof toDocument>, PredictionResponse>(
    (doc) => client.predict(doc),
    {
      onResult(response) {
        lastGood = response;
        banner.hidden = true;
        staleMark.hidden = true;
        clearFieldErrors();
        render(response);
      },
      onError(error) {
        if (error instanceof ServiceFailure && error.field) {
          showFieldError(error.field, error.message);
        } else {
          banner.hidden = false;
          el("banner-text").textContent =
            error instanceof Error ? error.message : "request failed";
        }
        if (lastGood) staleMark.hidden = false; // keep showing, but say so
      },
    },
    DEBOUNCE_MS,
  );

  const fieldErrorIds = ["age", "grs", "horizon"];
  function clearFieldErrors(): void {
    for (const id of fieldErrorIds) el(`err-${id}`).textContent = "";
  }
  function showFieldError(field: string, message: string): void {
    const id = field === "horizons" ? "horizon" : field;
    if (fieldErrorIds.includes(id)) {
      el(`err-${id}`).textContent = message;
    } else {
      banner.hidden = false;
      el("banner-text").textContent = `${field}: ${message}`;
    }
  }

  const recalc = (immediate = false) => {
    clearFieldErrors();
    const errors = validate(form);
    if (errors.length > 0) {
      for (const e of errors) showFieldError(e.field, e.message);
      return; // invalid form never issues a request
    }
    const doc = toDocument(form);
    if (immediate) controller.submit(doc);
    else controller.edit(doc);
  };

  const bindSelect = (id: string, apply: (value: string) => void) => {
    el<HTMLSelectElement>(id).addEventListener("change", (ev) => {
      apply((ev.target as HTMLSelectElement).value);
      recalc();
    });
  };
  bindSelect("drusen-left", (v) => (form.left.drusen = v as FormState["left"]["drusen"]));
  bindSelect("drusen-right", (v) => (form.right.drusen = v as FormState["right"]["drusen"]));
  bindSelect("pigment-left", (v) => (form.left.pigment = v as FormState["left"]["pigment"]));
  bindSelect("pigment-right", (v) => (form.right.pigment = v as FormState["right"]["pigment"]));
  bindSelect("smoking", (v) => (form.smoking = v as FormState["smoking"]));
  bindSelect("cfh", (v) => (form.cfh = v as FormState["cfh"]));
  bindSelect("arms2", (v) => (form.arms2 = v as FormState["arms2"]));
  bindSelect("horizon", (v) => (form = setHorizon(form, Number(v))));

  el<HTMLInputElement>("age").addEventListener("input", (ev) => {
    form.age = (ev.target as HTMLInputElement).value;
    recalc();
  });
  el<HTMLInputElement>("grs").addEventListener("input", (ev) => {
    form.grs = (ev.target as HTMLInputElement).value;
    recalc();
  });
  retry.addEventListener("click", () => recalc(true));

  client
    .metadata()
    .then((meta) => {
      el("loaded-note").textContent = `models loaded: ${meta.endpoints.join(", ")}`;
    })
    .catch(() => {
      el("loaded-note").textContent = "model metadata unavailable";
    });

  recalc(true); // first paint does not wait for the debounce window
}

document.addEventListener("DOMContentLoaded", main);
