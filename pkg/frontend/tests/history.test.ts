import { describe, expect, it } from "vitest";

import { History, parseHistoryCsv } from "../src/history.js";

const CSV =
    "time,q_1,q_2,qd_1,qd_2,f_1,f_2,cl\n" +
    "0.000000000000e+00,1.0e-01,2.0e-02,0.0e+00,0.0e+00,5.0e+01,1.0e+00,3.0e-01\n" +
    "1.000000000000e-03,1.1e-01,2.1e-02,1.0e+00,2.0e+00,5.1e+01,1.1e+00,3.1e-01\n";

describe("parseHistoryCsv", () => {
    it("parses header and rows", () => {
        const table = parseHistoryCsv(CSV);
        expect(table.columns).toEqual([
            "time", "q_1", "q_2", "qd_1", "qd_2", "f_1", "f_2", "cl",
        ]);
        expect(table.data).toHaveLength(2);
        expect(table.data[1][0]).toBeCloseTo(1e-3, 12);
    });

    it("rejects ragged rows", () => {
        expect(() => parseHistoryCsv("time,q_1\n0.0,1.0,2.0\n")).toThrow(/expected 2/);
    });

    it("rejects non-numeric fields", () => {
        expect(() => parseHistoryCsv("time,q_1\n0.0,oops\n")).toThrow(/non-numeric/);
    });

    it("rejects empty text", () => {
        expect(() => parseHistoryCsv("")).toThrow(/empty/);
    });
});

describe("History", () => {
    it("exposes columns by name and keeps the raw csv", () => {
        const history = new History(CSV, { final_h: 0.11 }, null, ["cl"]);
        expect(history.rows).toBe(2);
        expect(history.csv).toBe(CSV);
        expect(history.time).toEqual([0.0, 1e-3]);
        expect(history.column("q_1")).toEqual([0.1, 0.11]);
        expect(history.column("cl")[1]).toBeCloseTo(0.31, 12);
        expect(history.summary.final_h).toBe(0.11);
        expect(history.monitorNames).toEqual(["cl"]);
    });

    it("names the missing column in errors", () => {
        const history = new History(CSV);
        expect(() => history.column("nope")).toThrow(/no history column 'nope'/);
    });
});
