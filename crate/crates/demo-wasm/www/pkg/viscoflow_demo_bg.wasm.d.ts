/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_run_free: (a: number, b: number) => void;
export const curves: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const inspect: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const run_advance: (a: number, b: number) => number;
export const run_energy: (a: number) => number;
export const run_error: (a: number) => [number, number];
export const run_lambda_field: (a: number) => [number, number];
export const run_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const run_time: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
