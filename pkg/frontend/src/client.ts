/**
 * Driver-level bindings over the coupling service.
 *
 * The client reproduces the usual scripting flow: load a configuration and
 * a structural model, build the solver pair, launch the simulation, read
 * the history back with columns by name. All numerics stay server-side;
 * server diagnostics are re-thrown verbatim.
 */

import { readFile } from "node:fs/promises";

import { History } from "./history.js";

/** Error carrying the engine's diagnostic text and the HTTP status. */
export class AerocoupleError extends Error {
    constructor(
        message: string,
        readonly status: number | null = null,
    ) {
        super(message);
        this.name = "AerocoupleError";
    }
}

export interface ConfigHandle {
    /** Original file content; runs are launched from this exact text. */
    text: string;
    /** Server-resolved settings with defaults applied. */
    resolved: Record<string, unknown>;
    warnings: string[];
}

export interface ModelHandle {
    text: string;
}

/** Fluid-side descriptor returned by buildSolvers (validated server-side). */
export interface FluidSolver {
    kind: string;
    interfacePoints: number;
    mapCondition: number;
}

/** Solid-side descriptor: the validated structural model. */
export interface SolidSolver {
    text: string;
    modes: number;
    nodes: number;
    frequencies: number[];
}

export interface SweepRow {
    value: number;
    damping: number;
    frequency: number;
}

export interface SweepResult {
    key: string;
    rows: SweepRow[];
    flutterSpeed: number | null;
    bracket: [number, number] | null;
    trend: string;
    csv: string;
}

export interface TransferFunctionResult {
    magnitude: number;
    phaseDeg: number;
    illConditioned: boolean;
    periods: number;
}

export interface IdentifiedMode {
    frequencyHz: number;
    damping: number;
    amplitude: number;
}

interface RunResponse {
    mode: string;
    summary: Record<string, number | string>;
    history_csv: string;
    fsi_log_csv: string | null;
    monitor_names: string[];
    warnings: string[];
}

export class AerocoupleClient {
    constructor(readonly baseUrl: string) {}

    private async post<T>(path: string, body: unknown): Promise<T> {
        let response: Response;
        try {
            response = await fetch(`${this.baseUrl}${path}`, {
                method: "POST",
                headers: { "content-type": "application/json" },
                body: JSON.stringify(body),
            });
        } catch (err) {
            throw new AerocoupleError(`cannot reach ${this.baseUrl}: ${err}`);
        }
        if (!response.ok) {
            let detail = await response.text();
            try {
                const parsed = JSON.parse(detail);
                if (parsed && parsed.detail !== undefined) {
                    detail = typeof parsed.detail === "string"
                        ? parsed.detail
                        : JSON.stringify(parsed.detail);
                }
            } catch {
                // non-JSON error body: keep the raw text
            }
            throw new AerocoupleError(detail, response.status);
        }
        return (await response.json()) as T;
    }

    async health(): Promise<{ status: string; version: string }> {
        const response = await fetch(`${this.baseUrl}/health`);
        if (!response.ok) {
            throw new AerocoupleError(`health check failed (${response.status})`);
        }
        return (await response.json()) as { status: string; version: string };
    }

    /** Parse configuration text server-side (defaults applied). */
    async configFromText(text: string): Promise<ConfigHandle> {
        const body = await this.post<{ config: Record<string, unknown>; warnings: string[] }>(
            "/api/config",
            { config_text: text },
        );
        return { text, resolved: body.config, warnings: body.warnings };
    }

    async loadConfig(path: string): Promise<ConfigHandle> {
        return this.configFromText(await readFile(path, "utf8"));
    }

    modelFromText(text: string): ModelHandle {
        return { text };
    }

    async loadModel(path: string): Promise<ModelHandle> {
        return this.modelFromText(await readFile(path, "utf8"));
    }

    /**
     * Validate the pair and return the (fluid, solid) descriptors: the
     * server rejects any config/model mismatch here, before any compute.
     */
    async buildSolvers(
        config: ConfigHandle,
        model: ModelHandle,
    ): Promise<{ fluid: FluidSolver; solid: SolidSolver }> {
        const report = await this.post<{
            aero_model: string;
            n_modes: number;
            n_nodes: number;
            frequencies: number[];
            n_fluid_points: number;
            map_condition: number;
        }>("/api/check", { config_text: config.text, model_text: model.text });
        return {
            fluid: {
                kind: report.aero_model,
                interfacePoints: report.n_fluid_points,
                mapCondition: report.map_condition,
            },
            solid: {
                text: model.text,
                modes: report.n_modes,
                nodes: report.n_nodes,
                frequencies: report.frequencies,
            },
        };
    }

    /** Launch the configured simulation; the History wraps the exact CSV. */
    async run(config: ConfigHandle, fluid: FluidSolver, solid: SolidSolver): Promise<History> {
        void fluid; // the fluid side is rebuilt server-side from the config
        const body = await this.post<RunResponse>("/api/run", {
            config_text: config.text,
            model_text: solid.text,
        });
        return new History(body.history_csv, body.summary, body.fsi_log_csv, body.monitor_names);
    }

    /** One simulation per value of a config key; damping rows in order. */
    async sweep(
        config: ConfigHandle,
        model: ModelHandle,
        key: string,
        values: number[],
    ): Promise<SweepResult> {
        const body = await this.post<{
            key: string;
            rows: SweepRow[];
            flutter_speed: number | null;
            bracket: [number, number] | null;
            trend: string;
            csv: string;
        }>("/api/sweep", {
            config_text: config.text,
            model_text: model.text,
            key,
            values,
        });
        return {
            key: body.key,
            rows: body.rows,
            flutterSpeed: body.flutter_speed,
            bracket: body.bracket,
            trend: body.trend,
            csv: body.csv,
        };
    }

    async transferFunction(
        history: History,
        inputColumn: string,
        outputColumn: string,
        frequency: number,
        transientFraction = 0.2,
    ): Promise<TransferFunctionResult> {
        const body = await this.post<{ result: Record<string, unknown> }>("/api/analyze", {
            operation: "transfer_function",
            history_csv: history.csv,
            input_column: inputColumn,
            output_column: outputColumn,
            frequency,
            transient_fraction: transientFraction,
        });
        return {
            magnitude: body.result.magnitude as number,
            phaseDeg: body.result.phase_deg as number,
            illConditioned: body.result.ill_conditioned as boolean,
            periods: body.result.periods as number,
        };
    }

    async identifyModes(
        history: History,
        column: string,
        nExpected: number,
        transientFraction = 0.2,
    ): Promise<IdentifiedMode[]> {
        const body = await this.post<{
            result: { modes: { frequency_hz: number; damping: number; amplitude: number }[] };
        }>("/api/analyze", {
            operation: "modal_identification",
            history_csv: history.csv,
            column,
            n_expected: nExpected,
            transient_fraction: transientFraction,
        });
        return body.result.modes.map((m) => ({
            frequencyHz: m.frequency_hz,
            damping: m.damping,
            amplitude: m.amplitude,
        }));
    }

    async flutterBoundary(
        speeds: number[],
        dampings: number[],
    ): Promise<{ speed: number | null; bracket: [number, number] | null; trend: string }> {
        const body = await this.post<{
            result: { speed: number | null; bracket: [number, number] | null; trend: string };
        }>("/api/analyze", { operation: "flutter_boundary", speeds, dampings });
        return body.result;
    }
}
