/* tslint:disable */
/* eslint-disable */

/**
 * A periodic or walled 2D run on an `n × n` slab.
 */
export class Run {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Advances up to `steps` steps; stops early on a numerical failure,
     * which is then reported by `error()`.
     */
    advance(steps: number): number;
    /**
     * Kinetic energy plus the integrated free energy.
     */
    energy(): number;
    error(): string | undefined;
    /**
     * Minimal eigenvalue of `B` per cell, row-major with `x` fastest.
     */
    lambda_field(): Float64Array;
    /**
     * `scenario` is one of `taylor_green`, `shear_decay`,
     * `lid_slip_cavity`, `rest_state`.
     */
    constructor(scenario: string, n: number, perturbation: number, gamma: number, eps: number);
    time(): number;
}

/**
 * Samples the uniaxial family `B = diag(s, 1, 1)` for `s` in
 * `[s_min, s_max]`. Returns `samples` rows of `(s, ρ_ε(B), ψ(B))`
 * flattened; `ψ` is NaN where `B` is not positive definite.
 */
export function curves(eps: number, gamma: number, s_min: number, s_max: number, samples: number): Float64Array;

/**
 * Pointwise diagnostics of one conformation tensor, as a JSON object:
 * eigenvalues, determinant, cut-off factor, free energy and the residual
 * of `B J = μ S(B)` (the last two are null off the positive cone).
 */
export function inspect(entries: Float64Array, gamma: number, eps: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_run_free: (a: number, b: number) => void;
    readonly curves: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly inspect: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly run_advance: (a: number, b: number) => number;
    readonly run_energy: (a: number) => number;
    readonly run_error: (a: number) => [number, number];
    readonly run_lambda_field: (a: number) => [number, number];
    readonly run_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly run_time: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
