import { describe, expect, it } from "vitest";

import {
  HORIZONS,
  initialForm,
  setHorizon,
  toDocument,
  validate,
} from "../src/form.js";

describe("horizon selector", () => {
  it("offers exactly the whole years one through twelve", () => {
    expect([...HORIZONS]).toEqual([1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]);
  });

  it("accepts every offered value", () => {
    let form = initialForm();
    for (const h of HORIZONS) {
      form = setHorizon(form, h);
      expect(form.horizon).toBe(h);
    }
  });

  it("ignores anything outside the offered range", () => {
    const form = setHorizon(initialForm(), 5);
    for (const bad of [0, 13, -1, 2.5, NaN, 100]) {
      expect(setHorizon(form, bad).horizon).toBe(5);
    }
  });
});

describe("validation", () => {
  it("passes the initial form", () => {
    expect(validate(initialForm())).toEqual([]);
  });

  it("anchors errors to the offending field", () => {
    const bad = { ...initialForm(), age: "old" };
    expect(validate(bad).map((e) => e.field)).toEqual(["age"]);
    const blank = { ...initialForm(), age: "" };
    expect(validate(blank).map((e) => e.field)).toEqual(["age"]);
    const grs = { ...initialForm(), grs: "high" };
    expect(validate(grs).map((e) => e.field)).toEqual(["grs"]);
  });
});

describe("request document", () => {
  it("carries grades, demographics, and the full curve horizons", () => {
    const doc = toDocument(initialForm());
    expect(doc.grades).toEqual({
      left: { drusen: "none_small", pigment: "absent" },
      right: { drusen: "none_small", pigment: "absent" },
    });
    expect(doc.age).toBe(70);
    expect(doc.smoking).toBe("never");
    expect(doc.horizons).toEqual([...HORIZONS]); // request the whole curve
    expect(doc.genotype).toBeUndefined(); // nothing entered, nothing sent
  });

  it("includes genotype only for the fields actually entered", () => {
    const form = { ...initialForm(), cfh: "CT" as const, grs: "1.25" };
    const doc = toDocument(form);
    expect(doc.genotype).toEqual({ cfh: "CT", grs: 1.25 });
  });
});
