/* tslint:disable */
/* eslint-disable */

/**
 * Lift a sampled shape series and return the verdict report.
 */
export function lift_verdict(times: Float64Array, values: Float64Array, circle: boolean): string;

/**
 * Arm polygons of the scallop at rest opening plus `stroke`, flattened as
 * `[n0, x, y, x, y, ..., n1, x, y, ...]` with `n` the vertex count of each loop.
 */
export function scallop_outline(stroke: number, panels: number): Float64Array;

/**
 * Source text of a builtin scenario, for prefilling the editor.
 */
export function scenario_source(name: string): string | undefined;

/**
 * Run a TOML scenario and return `{"csv": ..., "summary": ...}` as JSON.
 * Obstacle runs are refused; they take minutes even natively.
 */
export function simulate(config: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly lift_verdict: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly scallop_outline: (a: number, b: number) => [number, number, number, number];
    readonly scenario_source: (a: number, b: number) => [number, number];
    readonly simulate: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
