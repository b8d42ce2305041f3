/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_density_free: (a: number, b: number) => void;
export const density_cdf: (a: number, b: number) => [number, number, number];
export const density_edges: (a: number) => [number, number];
export const density_h_half: (a: number) => number;
export const density_values: (a: number) => [number, number];
export const empirical_statistics: (a: number, b: number, c: number) => [number, number, number, number];
export const invariant_density: (a: number, b: number) => [number, number, number];
export const simulate_orbit: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
