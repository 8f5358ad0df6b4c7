/* tslint:disable */
/* eslint-disable */

export class DecayDemo {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Fitted curve at the same storage times.
     */
    fitted(): Float64Array;
    /**
     * Retrieved photons per pulse estimated from camera counts.
     */
    measured(): Float64Array;
    /**
     * Storage times (s).
     */
    times(): Float64Array;
    readonly tau: number;
}

/**
 * The default experiment with its noiseless per-photon images precomputed.
 */
export class Memory {
    free(): void;
    [Symbol.dispose](): void;
    constructor();
    /**
     * Accumulates `frames` camera frames of both retrieved probes at
     * `photons` per pulse and measures each channel.
     */
    retrieve(photons: number, frames: number, seed: number): Retrieval;
}

export class Retrieval {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `[V1, R1, V2, R2]`.
     */
    metrics(): Float64Array;
    /**
     * Row-major 8-bit intensities of the background-subtracted image.
     */
    pixels(): Uint8Array;
    readonly height: number;
    readonly width: number;
}

/**
 * Stores probe 1 for a sweep of storage times with coherence time `tau_us`
 * and fits the counted retrieval.
 */
export function decay_demo(tau_us: number, photons: number, frames: number, seed: number): DecayDemo;

/**
 * Probe intensity transmission `|T|²` at `n` two-photon detunings spanning
 * `±span_mhz`, for a coupling Rabi frequency of `coupling_mhz` (both in MHz).
 */
export function eit_curve(coupling_mhz: number, span_mhz: number, n: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_decaydemo_free: (a: number, b: number) => void;
    readonly __wbg_memory_free: (a: number, b: number) => void;
    readonly __wbg_retrieval_free: (a: number, b: number) => void;
    readonly decay_demo: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly decaydemo_fitted: (a: number) => [number, number];
    readonly decaydemo_measured: (a: number) => [number, number];
    readonly decaydemo_tau: (a: number) => number;
    readonly decaydemo_times: (a: number) => [number, number];
    readonly eit_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly memory_new: () => [number, number, number];
    readonly memory_retrieve: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly retrieval_height: (a: number) => number;
    readonly retrieval_metrics: (a: number) => [number, number];
    readonly retrieval_pixels: (a: number) => [number, number];
    readonly retrieval_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
