/* tslint:disable */
/* eslint-disable */

/**
 * Layout: Bayes `(auc, brier, log_loss, calib_intercept, calib_slope)`, the
 * same for MLE, then ten `(predicted, observed)` pairs for each.
 */
export function compareCalibration(seed: number, n_train: number, prior_sd: number): Float64Array;

/**
 * Layout: `[next, grid_n, grid.., mean.., sd.., ucb..]`.
 */
export function gpExplore(xs: Float64Array, ys: Float64Array, kappa: number, lengthscale: number, grid_n: number, seed: number): Float64Array;

/**
 * Layout: `[threshold, realized_loss]` then `(mean, lower, upper, screen, outcome)` per subject.
 */
export function screenCohort(seed: number, cost_fp: number, cost_fn: number, use_upper: boolean, n_show: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly compareCalibration: (a: number, b: number, c: number) => [number, number, number, number];
    readonly gpExplore: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly screenCohort: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
