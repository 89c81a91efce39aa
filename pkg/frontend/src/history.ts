/** Time-history table parsed from the engine's CSV, columns by name. */

export interface HistoryTable {
    columns: string[];
    data: number[][];
}

/** Parse a history CSV produced by the engine (header + numeric rows). */
export function parseHistoryCsv(text: string): HistoryTable {
    const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
    if (lines.length === 0) {
        throw new Error("empty history text");
    }
    const columns = lines[0].split(",").map((c) => c.trim());
    const data: number[][] = [];
    for (let i = 1; i < lines.length; i++) {
        const fields = lines[i].split(",");
        if (fields.length !== columns.length) {
            throw new Error(
                `history row ${i + 1} has ${fields.length} fields, expected ${columns.length}`,
            );
        }
        const row = fields.map(Number);
        if (row.some((v) => Number.isNaN(v))) {
            throw new Error(`history row ${i + 1} contains a non-numeric field`);
        }
        data.push(row);
    }
    return { columns, data };
}

/**
 * Result of a simulation run: the raw CSV (byte-identical to what the CLI
 * writes), the parsed table, the run summary and the FSI iteration log.
 */
export class History {
    readonly columns: string[];
    private readonly data: number[][];

    constructor(
        readonly csv: string,
        readonly summary: Record<string, number | string> = {},
        readonly fsiLogCsv: string | null = null,
        readonly monitorNames: string[] = [],
    ) {
        const table = parseHistoryCsv(csv);
        this.columns = table.columns;
        this.data = table.data;
    }

    get rows(): number {
        return this.data.length;
    }

    /** Values of one named column over all time levels. */
    column(name: string): number[] {
        const index = this.columns.indexOf(name);
        if (index < 0) {
            throw new Error(`no history column '${name}' (have: ${this.columns.join(", ")})`);
        }
        return this.data.map((row) => row[index]);
    }

    get time(): number[] {
        return this.column("time");
    }
}
