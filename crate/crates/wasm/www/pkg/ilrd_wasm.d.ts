/* tslint:disable */
/* eslint-disable */

/**
 * Ulam estimate of the invariant density.
 */
export class Density {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    cdf(x: number): number;
    edges(): Float64Array;
    h_half(): number;
    values(): Float64Array;
}

/**
 * `[l2, w1, cvm]` of the orbit's empirical process, followed by the three
 * normalized values when `γ ≥ 1/2` (NaN otherwise).
 */
export function empirical_statistics(orbit: Float64Array, density: Density): Float64Array;

export function invariant_density(gamma: number, bins: number): Density;

/**
 * Orbit of length `n` after the default burn-in.
 */
export function simulate_orbit(gamma: number, n: number, seed: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_density_free: (a: number, b: number) => void;
    readonly density_cdf: (a: number, b: number) => [number, number, number];
    readonly density_edges: (a: number) => [number, number];
    readonly density_h_half: (a: number) => number;
    readonly density_values: (a: number) => [number, number];
    readonly empirical_statistics: (a: number, b: number, c: number) => [number, number, number, number];
    readonly invariant_density: (a: number, b: number) => [number, number, number];
    readonly simulate_orbit: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
