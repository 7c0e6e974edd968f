// Form state and its mapping to a subject document. The horizon
// selector is generated from HORIZONS and setHorizon refuses anything
// outside it, so a request can never carry an out-of-range horizon.

import type { SubjectDocument } from "./api.js";

export const HORIZONS: readonly number[] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

export const DRUSEN_OPTIONS = ["none_small", "medium", "large"] as const;
export const PIGMENT_OPTIONS = ["absent", "present"] as const;
export const SMOKING_OPTIONS = ["never", "former", "current"] as const;
export const CFH_OPTIONS = ["", "TT", "CT", "CC"] as const;
export const ARMS2_OPTIONS = ["", "GG", "GT", "TT"] as const;

export type Drusen = (typeof DRUSEN_OPTIONS)[number];
export type Pigment = (typeof PIGMENT_OPTIONS)[number];
export type Smoking = (typeof SMOKING_OPTIONS)[number];

export interface EyeState {
  drusen: Drusen;
  pigment: Pigment;
}

export interface FormState {
  left: EyeState;
  right: EyeState;
  age: string; // raw field text, validated on read
  smoking: Smoking;
  cfh: (typeof CFH_OPTIONS)[number];
  arms2: (typeof ARMS2_OPTIONS)[number];
  grs: string; // raw field text, optional
  horizon: number;
}

export function initialForm(): FormState {
  return {
    left: { drusen: "none_small", pigment: "absent" },
    right: { drusen: "none_small", pigment: "absent" },
    age: "70",
    smoking: "never",
    cfh: "",
    arms2: "",
    grs: "",
    horizon: 5,
  };
}

export function setHorizon(form: FormState, value: number): FormState {
  if (!HORIZONS.includes(value)) {
    return form; // selector offers 1..12 only; anything else is ignored
  }
  return { ...form, horizon: value };
}

export interface FieldError {
  field: string;
  message: string;
}

export function validate(form: FormState): FieldError[] {
  const errors: FieldError[] = [];
  const age = Number(form.age);
  if (form.age.trim() === "" || !Number.isFinite(age)) {
    errors.push({ field: "age", message: "age must be a number" });
  } else if (age <= 0 || age > 120) {
    errors.push({ field: "age", message: "age must be between 1 and 120" });
  }
  if (form.grs.trim() !== "" && !Number.isFinite(Number(form.grs))) {
    errors.push({ field: "grs", message: "risk score must be a number" });
  }
  if (!HORIZONS.includes(form.horizon)) {
    errors.push({ field: "horizons", message: "horizon must be 1..12" });
  }
  return errors;
}

// The request asks for the whole 1..12 curve regardless of the selected
// horizon; the selector only moves the highlight, so horizon changes
// still round-trip through the service (fresh request, fresh numbers).
export function toDocument(form: FormState): SubjectDocument {
  const doc: SubjectDocument = {
    grades: {
      left: { drusen: form.left.drusen, pigment: form.left.pigment },
      right: { drusen: form.right.drusen, pigment: form.right.pigment },
    },
    age: Number(form.age),
    smoking: form.smoking,
    horizons: [...HORIZONS],
  };
  const genotype: { cfh?: string; arms2?: string; grs?: number } = {};
  if (form.cfh !== "") genotype.cfh = form.cfh;
  if (form.arms2 !== "") genotype.arms2 = form.arms2;
  if (form.grs.trim() !== "") genotype.grs = Number(form.grs);
  if (Object.keys(genotype).length > 0) doc.genotype = genotype;
  return doc;
}
